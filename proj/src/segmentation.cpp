#include "txg/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "txg/uv_baker.hpp"

namespace txg {

namespace {

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0, na = 0, nb = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0 || nb == 0) return 0.0;
    return dot / std::sqrt(na * nb);
}

struct UnionFind {
    std::vector<int> parent;

    explicit UnionFind(int n) : parent(size_t(n)) {
        for (int i = 0; i < n; ++i) parent[size_t(i)] = i;
    }
    int find(int x) {
        while (parent[size_t(x)] != x) {
            parent[size_t(x)] = parent[size_t(parent[size_t(x)])];
            x = parent[size_t(x)];
        }
        return x;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        // keep the smaller root so surviving ids are deterministic
        if (a == b) return;
        if (a < b) parent[size_t(b)] = a;
        else parent[size_t(a)] = b;
    }
};

} // namespace

std::vector<double> default_region_features(const TextureImage& img, const RegionMask& mask,
                                            int id) {
    if (img.width != mask.width || img.height != mask.height)
        throw std::invalid_argument("region features: image/mask size mismatch");
    const uint32_t kc = std::min<uint32_t>(3, img.channels);
    std::vector<double> feat(27, 0.0);
    size_t n = 0;
    for (uint32_t y = 0; y < mask.height; ++y) {
        for (uint32_t x = 0; x < mask.width; ++x) {
            if (mask.at(x, y) != id) continue;
            const float* px = img.at(x, y);
            for (uint32_t c = 0; c < kc; ++c) {
                double v = std::clamp(double(px[c]), 0.0, 1.0);
                feat[c] += v;
                int bin = std::min(7, int(v * 8.0));
                feat[3 + size_t(c) * 8 + size_t(bin)] += 1.0;
            }
            ++n;
        }
    }
    if (n > 0)
        for (double& v : feat) v /= double(n);
    return feat;
}

void compute_region_features(const TextureImage& img, RegionMask& mask,
                             const RegionFeatureFn& fn) {
    int max_id = 0;
    for (int v : mask.labels) max_id = std::max(max_id, v);
    mask.features.assign(size_t(max_id), {});
    mask.pixel_counts.assign(size_t(max_id), 0);
    for (int v : mask.labels)
        if (v > 0) ++mask.pixel_counts[size_t(v - 1)];
    for (int id = 1; id <= max_id; ++id) mask.features[size_t(id - 1)] = fn(img, mask, id);
}

RegionMask merge_regions(const RegionMask& mask, double tau) {
    const int n = mask.region_count();
    if (size_t(n) != mask.pixel_counts.size())
        throw std::invalid_argument("merge_regions: features/counts misaligned");

    // adjacency between original ids from 4-neighbor pixel boundaries
    std::set<std::pair<int, int>> adjacent;
    for (uint32_t y = 0; y < mask.height; ++y) {
        for (uint32_t x = 0; x < mask.width; ++x) {
            int a = mask.at(x, y);
            if (a == 0) continue;
            if (x + 1 < mask.width) {
                int b = mask.at(x + 1, y);
                if (b != 0 && b != a) adjacent.insert({std::min(a, b), std::max(a, b)});
            }
            if (y + 1 < mask.height) {
                int b = mask.at(x, y + 1);
                if (b != 0 && b != a) adjacent.insert({std::min(a, b), std::max(a, b)});
            }
        }
    }

    UnionFind uf(n + 1);
    std::vector<std::vector<double>> feat = mask.features;
    std::vector<size_t> count = mask.pixel_counts;

    while (true) {
        // collect current adjacency between cluster roots
        std::set<std::pair<int, int>> live;
        for (const auto& [a, b] : adjacent) {
            int ra = uf.find(a), rb = uf.find(b);
            if (ra != rb) live.insert({std::min(ra, rb), std::max(ra, rb)});
        }
        double best = -std::numeric_limits<double>::infinity();
        std::pair<int, int> best_pair{0, 0};
        for (const auto& p : live) { // set order = smaller-id-pair tie break
            double s = cosine_similarity(feat[size_t(p.first - 1)], feat[size_t(p.second - 1)]);
            if (s > best) {
                best = s;
                best_pair = p;
            }
        }
        if (live.empty() || best < tau) break;
        auto [a, b] = best_pair;
        size_t na = count[size_t(a - 1)], nb = count[size_t(b - 1)];
        size_t total = na + nb;
        for (size_t i = 0; i < feat[size_t(a - 1)].size(); ++i)
            feat[size_t(a - 1)][i] = total == 0
                ? 0.0
                : (feat[size_t(a - 1)][i] * double(na) + feat[size_t(b - 1)][i] * double(nb)) /
                      double(total);
        count[size_t(a - 1)] = total;
        uf.unite(a, b);
    }

    // compact surviving roots to contiguous ids preserving order
    std::map<int, int> remap;
    for (int id = 1; id <= n; ++id)
        if (uf.find(id) == id) {
            int fresh = int(remap.size()) + 1;
            remap[id] = fresh;
        }
    RegionMask out;
    out.width = mask.width;
    out.height = mask.height;
    out.labels.resize(mask.labels.size());
    for (size_t i = 0; i < mask.labels.size(); ++i)
        out.labels[i] = mask.labels[i] == 0 ? 0 : remap.at(uf.find(mask.labels[i]));
    out.features.resize(remap.size());
    out.pixel_counts.resize(remap.size());
    for (const auto& [root, fresh] : remap) {
        out.features[size_t(fresh - 1)] = feat[size_t(root - 1)];
        out.pixel_counts[size_t(fresh - 1)] = count[size_t(root - 1)];
    }
    return out;
}

RegionMaskSet merge_regions(const RegionMaskSet& masks, double tau) {
    RegionMaskSet out;
    out.views.reserve(masks.views.size());
    for (const auto& v : masks.views) out.views.push_back(merge_regions(v, tau));
    return out;
}

// ---------------------------------------------------------------------------

RawFaceLabels assign_labels(const SparseAttributeGrid& grid, const TriangleMesh& mesh,
                            double sample_eps) {
    if (grid.empty()) throw std::invalid_argument("assign_labels: empty grid");
    const std::string span = grid.layout().k_semantic >= 3 ? "semantic" : "color";
    auto [offset, count] = grid.layout().span(span);
    if (count < 3) throw std::invalid_argument("assign_labels: label span narrower than 3");

    RawFaceLabels out;
    out.labels.resize(mesh.face_count());
    out.fallback.assign(mesh.face_count(), 0);

    const double inv_res = 1.0 / double(grid.resolution());
    for (size_t f = 0; f < mesh.face_count(); ++f) {
        auto v = mesh.face_vertices(f);
        Vec3 pts[4] = {(v[0] + v[1] + v[2]) * (1.0 / 3.0), (v[0] + v[1]) * 0.5, (v[1] + v[2]) * 0.5,
                       (v[2] + v[0]) * 0.5};
        std::vector<std::array<double, 3>> samples;
        for (const Vec3& p : pts) {
            auto s = grid.trilinear_query(QueryPoint{p.x, p.y, p.z});
            if (s.missing_mass >= 1.0) continue; // no supporting corner at all
            // renormalize by the available support so surface samples keep
            // full-strength label vectors
            const double scale = 1.0 / (1.0 - s.missing_mass);
            samples.push_back({s.values[offset] * scale, s.values[offset + 1] * scale,
                               s.values[offset + 2] * scale});
        }
        if (samples.empty()) {
            // nearest voxel center to the centroid
            const Vec3& c = pts[0];
            double best = std::numeric_limits<double>::infinity();
            size_t best_row = 0;
            for (size_t i = 0; i < grid.size(); ++i) {
                VoxelCoord vc = grid.coord(i);
                double dx = (vc.ix + 0.5) * inv_res - 0.5 - c.x;
                double dy = (vc.iy + 0.5) * inv_res - 0.5 - c.y;
                double dz = (vc.iz + 0.5) * inv_res - 0.5 - c.z;
                double d = dx * dx + dy * dy + dz * dz;
                if (d < best) {
                    best = d;
                    best_row = i;
                }
            }
            const float* row = grid.row(best_row);
            out.labels[f] = {row[offset], row[offset + 1], row[offset + 2]};
            out.fallback[f] = 1;
            continue;
        }
        // majority after clustering: biggest single-linkage cluster of the
        // samples; first-come cluster wins ties
        PartSegmentation clusters = cluster_labels(samples, sample_eps);
        std::vector<size_t> sizes(size_t(clusters.part_count), 0);
        for (int id : clusters.face_part) ++sizes[size_t(id)];
        int major = int(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
        std::array<double, 3> acc{0, 0, 0};
        size_t nmaj = 0;
        for (size_t i = 0; i < samples.size(); ++i) {
            if (clusters.face_part[i] != major) continue;
            for (int c = 0; c < 3; ++c) acc[size_t(c)] += samples[i][size_t(c)];
            ++nmaj;
        }
        for (int c = 0; c < 3; ++c) acc[size_t(c)] /= double(nmaj);
        out.labels[f] = acc;
    }
    return out;
}

PartSegmentation cluster_labels(const std::vector<std::array<double, 3>>& raw, double eps) {
    if (eps <= 0) throw std::invalid_argument("cluster_labels: eps must be positive");
    const int n = int(raw.size());
    UnionFind uf(n);
    // single linkage at threshold eps == connected components of the
    // <=eps-distance graph
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            double dx = raw[size_t(i)][0] - raw[size_t(j)][0];
            double dy = raw[size_t(i)][1] - raw[size_t(j)][1];
            double dz = raw[size_t(i)][2] - raw[size_t(j)][2];
            if (std::sqrt(dx * dx + dy * dy + dz * dz) <= eps) uf.unite(i, j);
        }
    }
    PartSegmentation seg;
    seg.face_part.resize(size_t(n));
    std::map<int, int> remap; // root -> part id by first-face order
    for (int i = 0; i < n; ++i) {
        int root = uf.find(i);
        auto it = remap.find(root);
        if (it == remap.end()) it = remap.emplace(root, int(remap.size())).first;
        seg.face_part[size_t(i)] = it->second;
    }
    seg.part_count = int(remap.size());
    seg.centers.assign(size_t(seg.part_count), {0, 0, 0});
    std::vector<size_t> counts(size_t(seg.part_count), 0);
    for (int i = 0; i < n; ++i) {
        int p = seg.face_part[size_t(i)];
        for (int c = 0; c < 3; ++c) seg.centers[size_t(p)][size_t(c)] += raw[size_t(i)][size_t(c)];
        ++counts[size_t(p)];
    }
    for (int p = 0; p < seg.part_count; ++p)
        for (int c = 0; c < 3; ++c) seg.centers[size_t(p)][size_t(c)] /= double(counts[size_t(p)]);
    return seg;
}

// ---------------------------------------------------------------------------

std::vector<int> hungarian_match(const std::vector<std::vector<double>>& score) {
    const int rows = int(score.size());
    if (rows == 0) return {};
    const int cols = int(score[0].size());
    for (const auto& r : score)
        if (int(r.size()) != cols) throw std::invalid_argument("hungarian: ragged matrix");
    const int n = std::max(rows, cols);

    // classic potentials formulation on a padded square matrix, minimizing
    // negated scores
    std::vector<std::vector<double>> a(size_t(n) + 1, std::vector<double>(size_t(n) + 1, 0.0));
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) a[size_t(i) + 1][size_t(j) + 1] = -score[size_t(i)][size_t(j)];

    const double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> u(size_t(n) + 1, 0.0), v(size_t(n) + 1, 0.0);
    std::vector<int> p(size_t(n) + 1, 0), way(size_t(n) + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(size_t(n) + 1, kInf);
        std::vector<char> used(size_t(n) + 1, 0);
        do {
            used[size_t(j0)] = 1;
            int i0 = p[size_t(j0)], j1 = 0;
            double delta = kInf;
            for (int j = 1; j <= n; ++j) {
                if (used[size_t(j)]) continue;
                double cur = a[size_t(i0)][size_t(j)] - u[size_t(i0)] - v[size_t(j)];
                if (cur < minv[size_t(j)]) {
                    minv[size_t(j)] = cur;
                    way[size_t(j)] = j0;
                }
                if (minv[size_t(j)] < delta) {
                    delta = minv[size_t(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[size_t(j)]) {
                    u[size_t(p[size_t(j)])] += delta;
                    v[size_t(j)] -= delta;
                } else {
                    minv[size_t(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[size_t(j0)] != 0);
        do {
            int j1 = way[size_t(j0)];
            p[size_t(j0)] = p[size_t(j1)];
            j0 = j1;
        } while (j0);
    }

    std::vector<int> match(size_t(rows), -1);
    for (int j = 1; j <= n; ++j) {
        int i = p[size_t(j)];
        if (i >= 1 && i <= rows && j <= cols) match[size_t(i) - 1] = j - 1;
    }
    return match;
}

double miou(const PartSegmentation& pred, const PartSegmentation& gt,
            const std::vector<double>& face_areas) {
    if (pred.face_part.size() != gt.face_part.size() ||
        pred.face_part.size() != face_areas.size())
        throw std::invalid_argument("miou: face count mismatch");
    if (pred.part_count == 0 || gt.part_count == 0)
        throw std::invalid_argument("miou: zero part count");

    const size_t np = size_t(pred.part_count), ng = size_t(gt.part_count);
    std::vector<std::vector<double>> inter(np, std::vector<double>(ng, 0.0));
    std::vector<double> area_p(np, 0.0), area_g(ng, 0.0);
    for (size_t f = 0; f < face_areas.size(); ++f) {
        double a = face_areas[f];
        size_t ip = size_t(pred.face_part[f]), ig = size_t(gt.face_part[f]);
        inter[ip][ig] += a;
        area_p[ip] += a;
        area_g[ig] += a;
    }
    std::vector<std::vector<double>> iou(np, std::vector<double>(ng, 0.0));
    for (size_t i = 0; i < np; ++i)
        for (size_t j = 0; j < ng; ++j) {
            double uni = area_p[i] + area_g[j] - inter[i][j];
            iou[i][j] = uni > 0 ? inter[i][j] / uni : 0.0;
        }
    std::vector<int> match = hungarian_match(iou);
    double total = 0;
    for (size_t i = 0; i < np; ++i)
        if (match[i] >= 0) total += iou[i][size_t(match[i])];
    return total / double(ng);
}

// ---------------------------------------------------------------------------

std::vector<std::array<float, 3>> random_palette(size_t n, Rng& rng, double min_dist) {
    std::vector<std::array<float, 3>> palette;
    palette.reserve(n);
    const int kMaxTries = 10000;
    for (size_t i = 0; i < n; ++i) {
        bool placed = false;
        for (int tries = 0; tries < kMaxTries && !placed; ++tries) {
            std::array<float, 3> c = {float(rng.uniform()), float(rng.uniform()),
                                      float(rng.uniform())};
            bool ok = true;
            for (const auto& prev : palette) {
                double dx = c[0] - prev[0], dy = c[1] - prev[1], dz = c[2] - prev[2];
                if (std::sqrt(dx * dx + dy * dy + dz * dz) < min_dist) {
                    ok = false;
                    break;
                }
            }
            if (ok) {
                palette.push_back(c);
                placed = true;
            }
        }
        if (!placed)
            throw std::runtime_error("random_palette: cannot satisfy min distance");
    }
    return palette;
}

void save_part_ids(const PartSegmentation& seg, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_part_ids: cannot open " + path);
    for (int id : seg.face_part) out << id << "\n";
}

std::vector<int> load_part_ids(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_part_ids: cannot open " + path);
    std::vector<int> ids;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        size_t pos = 0;
        int v = std::stoi(line, &pos);
        if (pos != line.size()) throw std::runtime_error("load_part_ids: bad line: " + line);
        ids.push_back(v);
    }
    return ids;
}

TextureImage part_texture(const PartSegmentation& seg, const TriangleMesh& mesh,
                          uint32_t width, uint32_t height,
                          const std::vector<std::array<float, 3>>& palette) {
    if (seg.face_part.size() != mesh.face_count())
        throw std::invalid_argument("part_texture: segmentation/mesh mismatch");
    if (int(palette.size()) < seg.part_count)
        throw std::invalid_argument("part_texture: palette too small");
    std::vector<int32_t> face_ids;
    bake_position_map(mesh, width, height, nullptr, &face_ids);
    TextureImage img(width, height, 3);
    for (uint32_t y = 0; y < height; ++y) {
        for (uint32_t x = 0; x < width; ++x) {
            size_t t = img.texel(x, y);
            if (face_ids[t] < 0) continue;
            const auto& c = palette[size_t(seg.face_part[size_t(face_ids[t])])];
            float* dst = img.at(x, y);
            dst[0] = c[0];
            dst[1] = c[1];
            dst[2] = c[2];
            img.valid[t] = 1;
        }
    }
    return img;
}

} // namespace txg
