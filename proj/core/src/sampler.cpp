#include "geoseg/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "geoseg/rng.hpp"

namespace geoseg {

std::vector<int> PairList::degrees(int n_patches) const {
    std::vector<int> deg(n_patches, 0);
    for (const Pair& p : pairs) {
        deg.at(p.a)++;
        deg.at(p.b)++;
    }
    return deg;
}

void PairList::validate(const PatchDataset& dataset) const {
    const int n = dataset.size();
    std::unordered_set<uint64_t> seen;
    seen.reserve(pairs.size() * 2);
    for (const Pair& p : pairs) {
        if (p.a < 0 || p.a >= n || p.b < 0 || p.b >= n)
            throw std::runtime_error("PairList: patch index out of range");
        if (p.a == p.b) throw std::runtime_error("PairList: self-pair");
        if (dataset.patches[p.a].hemisphere != dataset.patches[p.b].hemisphere)
            throw std::runtime_error("PairList: cross-hemisphere pair");
        if (p.y_dist < 0) throw std::runtime_error("PairList: negative y_dist");
        uint64_t key = (static_cast<uint64_t>(std::min(p.a, p.b)) << 32) |
                       static_cast<uint32_t>(std::max(p.a, p.b));
        if (!seen.insert(key).second) throw std::runtime_error("PairList: duplicate pair");
    }
    if (!pairs.empty()) {
        auto deg = degrees(n);
        if (*std::min_element(deg.begin(), deg.end()) < 1)
            throw std::runtime_error("PairList: patch with degree 0");
    }
}

PatchDataset sample_patches(const World& world, const SurfaceMesh& mesh, int n,
                            double split_fraction, uint64_t seed) {
    if (n < 1) throw std::invalid_argument("sample_patches: n must be >= 1");
    if (split_fraction < 0 || split_fraction >= 1)
        throw std::invalid_argument("sample_patches: split_fraction must be in [0,1)");

    std::vector<int> candidates;
    std::vector<double> obliq(mesh.n_vertices());
    for (int v = 0; v < mesh.n_vertices(); ++v) {
        obliq[v] = obliqueness(mesh, v, world.spec.section_normal);
        if (obliq[v] >= kObliquenessMin && obliq[v] <= kObliquenessMax) candidates.push_back(v);
    }
    if (static_cast<int>(candidates.size()) < n)
        throw std::runtime_error("sample_patches: obliqueness filter left only " +
                                 std::to_string(candidates.size()) + " candidates, need " +
                                 std::to_string(n));

    // TEST strips along the u-parameter axis: every n_base-th of 4*n_base
    // strips, so the held-out share is ~split_fraction but spans the sheet.
    int n_base = split_fraction > 0 ? std::max(2, static_cast<int>(std::lround(1.0 / split_fraction)))
                                    : 0;
    int n_strips = 4 * std::max(n_base, 1);
    auto is_test = [&](int v) {
        if (n_base == 0) return false;
        double s = std::abs(mesh.inflated[v][kLeftRightAxis]);
        int strip = std::clamp(static_cast<int>(s / world.spec.sheet_size_u * n_strips), 0,
                               n_strips - 1);
        return strip % n_base == n_base / 2;
    };

    Rng rng(hash_combine(seed, 0x73616d706c65ULL /* "sample" */));
    // partial Fisher-Yates draw of n distinct candidates
    for (int i = 0; i < n; ++i) {
        size_t j = i + static_cast<size_t>(rng.uniform_index(candidates.size() - i));
        std::swap(candidates[i], candidates[j]);
    }

    PatchDataset ds;
    ds.patches.reserve(n);
    for (int i = 0; i < n; ++i) {
        int v = candidates[i];
        PatchMeta m;
        m.vertex = v;
        m.hemisphere = mesh.hemisphere[v];
        m.region = mesh.region[v];
        m.obliqueness_deg = obliq[v];
        m.split = is_test(v) ? Split::TEST : Split::TRAIN;
        m.y_coord = target_coordinate(mesh, v);
        ds.patches.push_back(m);
    }
    return ds;
}

namespace {

// Inverse-CDF sampler for P(d) ~ d^-gamma on [1, dmax].
class PowerLawSampler {
  public:
    PowerLawSampler(double gamma, int dmax) : cdf_(dmax) {
        double acc = 0.0;
        for (int d = 1; d <= dmax; ++d) {
            acc += std::pow(static_cast<double>(d), -gamma);
            cdf_[d - 1] = acc;
        }
        for (double& c : cdf_) c /= acc;
    }
    int draw(Rng& rng) const {
        double u = rng.uniform();
        auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
        return static_cast<int>(it - cdf_.begin()) + 1;
    }

  private:
    std::vector<double> cdf_;
};

// Largest-remainder rounding of raw degrees to integers in [1, cap] summing
// to exactly `target` (cap = hemisphere size - 1 keeps simple pairing
// feasible).
std::vector<int> rescale_degrees(const std::vector<int>& raw, long long target, int cap) {
    const int n = static_cast<int>(raw.size());
    if (target > static_cast<long long>(n) * cap)
        throw std::runtime_error("build_pairs: pair budget exceeds hemisphere capacity");
    long long raw_sum = std::accumulate(raw.begin(), raw.end(), 0LL);
    double scale = static_cast<double>(target) / static_cast<double>(raw_sum);
    std::vector<int> deg(n);
    std::vector<std::pair<double, int>> remainder(n);  // (-fraction, index)
    long long sum = 0;
    for (int i = 0; i < n; ++i) {
        double r = std::clamp(raw[i] * scale, 1.0, static_cast<double>(cap));
        deg[i] = static_cast<int>(std::floor(r));
        remainder[i] = {-(r - deg[i]), i};
        sum += deg[i];
    }
    std::sort(remainder.begin(), remainder.end());
    if (sum < target) {
        long long need = target - sum;
        int stuck = 0;
        for (int k = 0; need > 0; k = (k + 1) % n) {
            if (deg[remainder[k].second] < cap) {
                deg[remainder[k].second]++;
                --need;
                stuck = 0;
            } else if (++stuck > n) {
                throw std::runtime_error("build_pairs: degree rescaling infeasible");
            }
        }
    } else if (sum > target) {
        long long excess = sum - target;
        // shave from the largest degrees first, never below 1
        std::vector<int> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            return deg[a] != deg[b] ? deg[a] > deg[b] : a < b;
        });
        while (excess > 0) {
            bool changed = false;
            for (int idx : order) {
                if (excess == 0) break;
                if (deg[idx] > 1) {
                    deg[idx]--;
                    --excess;
                    changed = true;
                }
            }
            if (!changed) throw std::runtime_error("build_pairs: degree rescaling infeasible");
        }
    }
    return deg;
}

uint64_t pair_key(int a, int b) {
    return (static_cast<uint64_t>(std::min(a, b)) << 32) | static_cast<uint32_t>(std::max(a, b));
}

}  // namespace

PairList build_pairs(const PatchDataset& dataset, int n_pairs, double gamma, uint64_t seed) {
    const int n = dataset.size();
    if (n == 0) throw std::invalid_argument("build_pairs: empty dataset");
    if (n_pairs * 2 < n)
        throw std::invalid_argument("build_pairs: need n_pairs >= patch_count/2 for min degree 1");

    std::array<std::vector<int>, 2> members;  // patch indices per hemisphere
    for (int i = 0; i < n; ++i)
        members[static_cast<int>(dataset.patches[i].hemisphere)].push_back(i);

    // split the pair budget proportionally, respecting per-hemisphere feasibility
    long long m_left = std::llround(static_cast<double>(n_pairs) * members[0].size() / n);
    long long need_left = (members[0].size() + 1) / 2;
    long long need_right = (members[1].size() + 1) / 2;
    m_left = std::max(m_left, need_left);
    long long m_right = n_pairs - m_left;
    if (m_right < need_right) {
        m_right = need_right;
        m_left = n_pairs - m_right;
        if (m_left < need_left)
            throw std::runtime_error("build_pairs: pair budget infeasible for hemisphere sizes");
    }
    if (members[0].size() < 2) {
        m_right += m_left;
        m_left = 0;
    }
    if (members[1].size() < 2) {
        m_left += m_right;
        m_right = 0;
    }

    Rng rng(hash_combine(seed, 0x7061697273ULL /* "pairs" */));
    PairList result;

    for (int h = 0; h < 2; ++h) {
        const auto& idx = members[h];
        long long m_h = (h == 0) ? m_left : m_right;
        if (idx.empty() || m_h == 0) continue;
        if (idx.size() == 1)
            throw std::runtime_error("build_pairs: hemisphere with a single patch cannot be paired");
        // structural cutoff sqrt(2m): keeps the expected number of duplicate
        // edges O(1) so the swap repair below terminates
        const int n_h = static_cast<int>(idx.size());
        int dmax = std::max<long long>(1, std::min<long long>(
            {n_h - 1, static_cast<long long>(std::sqrt(2.0 * m_h)), 1000}));
        PowerLawSampler sampler(gamma, dmax);
        std::vector<int> raw(idx.size());
        for (auto& d : raw) d = sampler.draw(rng);
        int cap = static_cast<int>(std::min<long long>(
            n_h - 1, std::max<long long>(dmax, (2 * m_h + n_h - 1) / n_h)));
        std::vector<int> deg = rescale_degrees(raw, 2 * m_h, cap);

        std::vector<int> stubs;
        stubs.reserve(static_cast<size_t>(2 * m_h));
        for (size_t i = 0; i < idx.size(); ++i)
            for (int d = 0; d < deg[i]; ++d) stubs.push_back(idx[i]);
        rng.shuffle(stubs);

        std::vector<Pair> pairs(m_h);
        std::unordered_map<uint64_t, int> count;  // multiplicity of each unordered pair
        count.reserve(static_cast<size_t>(m_h) * 2);
        for (long long k = 0; k < m_h; ++k) {
            pairs[k] = {stubs[2 * k], stubs[2 * k + 1], 0.0};
            if (pairs[k].a != pairs[k].b) count[pair_key(pairs[k].a, pairs[k].b)]++;
        }
        auto remove_key = [&](const Pair& p) {
            if (p.a == p.b) return;
            auto it = count.find(pair_key(p.a, p.b));
            if (--it->second == 0) count.erase(it);
        };
        auto multiplicity = [&](const Pair& p) {
            if (p.a == p.b) return 0;
            auto it = count.find(pair_key(p.a, p.b));
            return it == count.end() ? 0 : it->second;
        };
        // repair self-pairs and duplicates by bounded random stub swaps;
        // swaps preserve every patch's degree
        for (long long k = 0; k < m_h; ++k) {
            if (pairs[k].a != pairs[k].b && multiplicity(pairs[k]) <= 1) continue;
            bool fixed = false;
            for (int attempt = 0; attempt < 5000 && !fixed; ++attempt) {
                long long j = static_cast<long long>(rng.uniform_index(static_cast<uint64_t>(m_h)));
                if (j == k) continue;
                Pair pk = pairs[k], pj = pairs[j];
                std::swap(pk.b, pj.b);
                if (pk.a == pk.b || pj.a == pj.b) continue;
                uint64_t kk = pair_key(pk.a, pk.b), kj = pair_key(pj.a, pj.b);
                if (kk == kj) continue;
                remove_key(pairs[k]);
                remove_key(pairs[j]);
                if (count.count(kk) == 0 && count.count(kj) == 0) {
                    pairs[k] = pk;
                    pairs[j] = pj;
                    count[kk]++;
                    count[kj]++;
                    fixed = true;
                } else {  // roll back
                    if (pairs[k].a != pairs[k].b) count[pair_key(pairs[k].a, pairs[k].b)]++;
                    if (pairs[j].a != pairs[j].b) count[pair_key(pairs[j].a, pairs[j].b)]++;
                }
            }
            if (!fixed)
                throw std::runtime_error(
                    "build_pairs: could not repair pair constraints within retry budget");
        }
        result.pairs.insert(result.pairs.end(), pairs.begin(), pairs.end());
    }
    result.validate(dataset);
    return result;
}

void annotate_distances(PairList& pairs, const PatchDataset& dataset, const SurfaceMesh& mesh) {
    // group queries by source vertex and reuse one single-source sweep each
    std::map<int, std::vector<size_t>> by_source;
    for (size_t i = 0; i < pairs.pairs.size(); ++i) {
        const Pair& p = pairs.pairs[i];
        int va = dataset.patches[p.a].vertex;
        int vb = dataset.patches[p.b].vertex;
        by_source[std::min(va, vb)].push_back(i);
    }
    for (const auto& [source, indices] : by_source) {
        std::vector<double> dist = geodesic_from(mesh, source);
        for (size_t i : indices) {
            Pair& p = pairs.pairs[i];
            int va = dataset.patches[p.a].vertex;
            int vb = dataset.patches[p.b].vertex;
            int target = std::max(va, vb);
            double d = dist[target];
            if (!std::isfinite(d))
                throw std::runtime_error("annotate_distances: unreachable pair");
            p.y_dist = d;
        }
    }
    pairs.annotated = true;
}

void save_pairs(const PairList& pairs, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_pairs: cannot open " + path);
    out << "pairsv1 " << pairs.pairs.size() << "\n";
    out << std::setprecision(17);
    for (const Pair& p : pairs.pairs) out << p.a << " " << p.b << " " << p.y_dist << "\n";
    if (!out) throw std::runtime_error("save_pairs: write failed");
}

PairList load_pairs(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_pairs: cannot open " + path);
    std::string magic;
    size_t n = 0;
    if (!(in >> magic >> n) || magic != "pairsv1")
        throw std::runtime_error("load_pairs: bad header");
    PairList pl;
    pl.pairs.resize(n);
    for (size_t i = 0; i < n; ++i)
        if (!(in >> pl.pairs[i].a >> pl.pairs[i].b >> pl.pairs[i].y_dist))
            throw std::runtime_error("load_pairs: malformed line " + std::to_string(i));
    pl.annotated = true;
    return pl;
}

void save_dataset_manifest(const PatchDataset& dataset, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_dataset_manifest: cannot open " + path);
    out << "patchesv1 " << dataset.patches.size() << "\n";
    out << std::setprecision(17);
    for (const PatchMeta& m : dataset.patches) {
        out << m.vertex << " " << static_cast<int>(m.hemisphere) << " " << m.region << " "
            << m.obliqueness_deg << " " << static_cast<int>(m.split) << " " << m.y_coord[0] << " "
            << m.y_coord[1] << " " << m.y_coord[2] << "\n";
    }
    if (!out) throw std::runtime_error("save_dataset_manifest: write failed");
}

PatchDataset load_dataset_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_dataset_manifest: cannot open " + path);
    std::string magic;
    size_t n = 0;
    if (!(in >> magic >> n) || magic != "patchesv1")
        throw std::runtime_error("load_dataset_manifest: bad header");
    PatchDataset ds;
    ds.patches.resize(n);
    for (size_t i = 0; i < n; ++i) {
        PatchMeta& m = ds.patches[i];
        int h = 0, s = 0;
        if (!(in >> m.vertex >> h >> m.region >> m.obliqueness_deg >> s >> m.y_coord[0] >>
              m.y_coord[1] >> m.y_coord[2]))
            throw std::runtime_error("load_dataset_manifest: malformed line " + std::to_string(i));
        m.hemisphere = h == 0 ? Hemisphere::LEFT : Hemisphere::RIGHT;
        m.split = s == 0 ? Split::TRAIN : Split::TEST;
    }
    return ds;
}

}  // namespace geoseg
