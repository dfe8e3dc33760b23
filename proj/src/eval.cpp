#include "lvcd/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "lvcd/covers.hpp"
#include "lvcd/operators.hpp"
#include "lvcd/parallel.hpp"
#include "lvcd/rng.hpp"
#include "lvcd/sem.hpp"

namespace lvcd {

namespace {

// Calls fn(pi) for every injective map pi: {0..k-1} -> {0..n-1}, k <= n.
void for_each_injection(int k, int n, const std::function<void(const std::vector<int>&)>& fn) {
    std::vector<int> pi(k, -1);
    std::vector<bool> used(n, false);
    auto rec = [&](auto&& self, int depth) -> void {
        if (depth == k) {
            fn(pi);
            return;
        }
        for (int target = 0; target < n; ++target) {
            if (used[target]) continue;
            used[target] = true;
            pi[depth] = target;
            self(self, depth + 1);
            used[target] = false;
        }
    };
    rec(rec, 0);
}

// Skeleton edges in a shared node space: latents relabeled through `lat`,
// measured variable j encoded as lat_space + j.
std::set<std::pair<int, int>> skeleton_edges(const LatentDag& g, const std::vector<int>& lat,
                                             int lat_space) {
    std::set<std::pair<int, int>> edges;
    for (auto [p, c] : g.latent_edges()) {
        const int a = lat[p], b = lat[c];
        edges.insert({std::min(a, b), std::max(a, b)});
    }
    for (auto [l, x] : g.measurement_edges()) edges.insert({lat[l], lat_space + x});
    return edges;
}

std::vector<int> identity_map(int n) {
    std::vector<int> v(n);
    for (int i = 0; i < n; ++i) v[i] = i;
    return v;
}

// Pair state in a CPDAG: 1 undirected, 2 directed low->high, 3 directed
// high->low (keys are normalized to low < high).
std::map<std::pair<int, int>, int> cpdag_pair_states(const Cpdag& c, const std::vector<int>& lat,
                                                     int lat_space) {
    auto map_node = [&](int v) { return v < c.n ? lat[v] : lat_space + (v - c.n); };
    std::map<std::pair<int, int>, int> states;
    for (auto [a, b] : c.undirected) {
        const int u = map_node(a), v = map_node(b);
        states[{std::min(u, v), std::max(u, v)}] = 1;
    }
    for (auto [from, to] : c.directed) {
        const int u = map_node(from), v = map_node(to);
        states[{std::min(u, v), std::max(u, v)}] = u < v ? 2 : 3;
    }
    return states;
}

long pair_state_distance(const std::map<std::pair<int, int>, int>& a,
                         const std::map<std::pair<int, int>, int>& b) {
    long shd = 0;
    for (const auto& [key, state] : a) {
        auto it = b.find(key);
        if (it == b.end() || it->second != state) ++shd;
    }
    for (const auto& [key, state] : b) {
        (void)state;
        if (!a.count(key)) ++shd;
    }
    return shd;
}

}  // namespace

double f1_skeleton(const LatentDag& est, const LatentDag& truth) {
    if (est.m() != truth.m())
        throw std::invalid_argument("f1_skeleton: measured variable counts differ");
    const bool est_small = est.n() <= truth.n();
    const LatentDag& small = est_small ? est : truth;
    const LatentDag& big = est_small ? truth : est;
    const int lat_space = big.n();

    const auto big_edges = skeleton_edges(big, identity_map(big.n()), lat_space);

    double best = 0.0;
    for_each_injection(small.n(), big.n(), [&](const std::vector<int>& pi) {
        const auto small_edges = skeleton_edges(small, pi, lat_space);
        long tp = 0;
        for (const auto& e : small_edges) tp += big_edges.count(e);
        const size_t total = small_edges.size() + big_edges.size();
        const double f1 = total == 0 ? 1.0 : 2.0 * static_cast<double>(tp) / total;
        best = std::max(best, f1);
    });
    return best;
}

long shd_mec(const LatentDag& est, const LatentDag& truth) {
    if (est.m() != truth.m())
        throw std::invalid_argument("shd_mec: measured variable counts differ");
    const bool est_small = est.n() <= truth.n();
    const LatentDag& small = est_small ? est : truth;
    const LatentDag& big = est_small ? truth : est;
    const int lat_space = big.n();

    // Relabeling commutes with equivalence-class completion, so each CPDAG is
    // computed once and only its labels are permuted per injection.
    const Cpdag small_cpdag = cpdag(small);
    const Cpdag big_cpdag = cpdag(big);
    const auto big_states = cpdag_pair_states(big_cpdag, identity_map(big.n()), lat_space);

    long best = std::numeric_limits<long>::max();
    for_each_injection(small.n(), big.n(), [&](const std::vector<int>& pi) {
        const auto small_states = cpdag_pair_states(small_cpdag, pi, lat_space);
        best = std::min(best, pair_state_distance(small_states, big_states));
    });
    return best;
}

// ---- ground-truth library ------------------------------------------------------

namespace {

std::vector<GroundTruth> make_one_factor_truths() {
    std::vector<GroundTruth> out;
    {
        std::vector<std::pair<int, int>> meas;
        for (int i = 0; i < 6; ++i) meas.push_back({0, i});
        out.push_back({"one-factor-single", build_latent_dag(6, 1, {}, meas)});
    }
    {
        std::vector<std::pair<int, int>> meas;
        for (int i = 0; i < 3; ++i) meas.push_back({0, i});
        for (int i = 3; i < 6; ++i) meas.push_back({1, i});
        out.push_back({"one-factor-pair", build_latent_dag(6, 2, {{1, 0}}, meas)});
    }
    {
        std::vector<std::pair<int, int>> meas;
        for (int i = 0; i < 3; ++i) meas.push_back({0, i});
        for (int i = 3; i < 6; ++i) meas.push_back({1, i});
        for (int i = 6; i < 9; ++i) meas.push_back({2, i});
        out.push_back({"one-factor-chain", build_latent_dag(9, 3, {{2, 1}, {1, 0}}, meas)});
    }
    {
        std::vector<std::pair<int, int>> meas;
        for (int i = 0; i < 3; ++i) meas.push_back({0, i});
        for (int i = 3; i < 7; ++i) meas.push_back({1, i});
        out.push_back({"one-factor-split", build_latent_dag(7, 2, {}, meas)});
    }
    return out;
}

std::vector<GroundTruth> make_hierarchical_truths() {
    std::vector<GroundTruth> out;
    {
        // Root 2-cover {L2,L3} with measured children X3..X5 over the child
        // 2-cover {L0,L1} with measured children X0..X2.
        std::vector<std::pair<int, int>> lat, meas;
        for (int p = 2; p < 4; ++p)
            for (int c = 0; c < 2; ++c) lat.push_back({p, c});
        for (int l = 0; l < 2; ++l)
            for (int i = 0; i < 3; ++i) meas.push_back({l, i});
        for (int l = 2; l < 4; ++l)
            for (int i = 3; i < 6; ++i) meas.push_back({l, i});
        out.push_back({"hierarchical-nested-covers", build_latent_dag(6, 4, lat, meas)});
    }
    {
        // Singleton root L4 over the 2-covers {L2,L3} (children X0..X2) and
        // {L0,L1} (children X3..X5).
        std::vector<std::pair<int, int>> lat, meas;
        for (int c = 0; c < 4; ++c) lat.push_back({4, c});
        for (int l = 2; l < 4; ++l)
            for (int i = 0; i < 3; ++i) meas.push_back({l, i});
        for (int l = 0; l < 2; ++l)
            for (int i = 3; i < 6; ++i) meas.push_back({l, i});
        out.push_back({"hierarchical-two-covers", build_latent_dag(6, 5, lat, meas)});
    }
    {
        // Singleton root L2 with measured children X0, X1 over singleton
        // latents L1 (children X2..X4) and L0 (children X5..X7).
        out.push_back(
            {"hierarchical-tree",
             build_latent_dag(8, 3, {{2, 1}, {2, 0}},
                              {{2, 0}, {2, 1}, {1, 2}, {1, 3}, {1, 4}, {0, 5}, {0, 6}, {0, 7}})});
    }
    return out;
}

}  // namespace

std::vector<GroundTruth> builtin_ground_truths(TruthClass cls) {
    return cls == TruthClass::OneFactor ? make_one_factor_truths() : make_hierarchical_truths();
}

const GroundTruth& builtin_ground_truth(const std::string& id) {
    static const std::vector<GroundTruth> all = [] {
        auto v = make_one_factor_truths();
        auto h = make_hierarchical_truths();
        v.insert(v.end(), h.begin(), h.end());
        return v;
    }();
    for (const auto& gt : all)
        if (gt.id == id) return gt;
    throw std::invalid_argument("unknown builtin ground truth: " + id);
}

LatentDag random_hierarchical_dag(int m_max, int n_max, std::mt19937_64& rng) {
    if (m_max < 2 || n_max < 1)
        throw std::invalid_argument("random_hierarchical_dag: need m_max >= 2, n_max >= 1");
    std::uniform_int_distribution<int> n_dist(1, n_max);
    std::bernoulli_distribution pair_cover(0.35), extra_child(0.3);

    for (int attempt = 0; attempt < 10000; ++attempt) {
        const int n = n_dist(rng);

        // Partition the latents into covers of size 1 or 2.
        std::vector<int> cover_size;
        for (int left = n; left > 0;) {
            const int s = (left >= 2 && pair_cover(rng)) ? 2 : 1;
            cover_size.push_back(s);
            left -= s;
        }
        const int c = static_cast<int>(cover_size.size());

        // Tree over covers: each non-root cover hangs under an earlier cover
        // of at least its own size (smaller parents bottleneck the cover's
        // influence and break dimension counting).
        std::vector<int> parent(c, -1);
        bool ok = true;
        for (int i = 1; i < c && ok; ++i) {
            std::vector<int> eligible;
            for (int j = 0; j < i; ++j)
                if (cover_size[j] >= cover_size[i]) eligible.push_back(j);
            if (eligible.empty()) {
                ok = false;
                break;
            }
            std::uniform_int_distribution<size_t> pick(0, eligible.size() - 1);
            parent[i] = eligible[pick(rng)];
        }
        if (!ok) continue;

        // Latent ids per cover.
        std::vector<std::vector<int>> members(c);
        int next_lat = 0;
        for (int i = 0; i < c; ++i)
            for (int s = 0; s < cover_size[i]; ++s) members[i].push_back(next_lat++);

        std::vector<std::pair<int, int>> lat_edges;
        std::vector<int> latent_child_count(c, 0);
        std::vector<int> min_child_size(c, std::numeric_limits<int>::max());
        for (int i = 1; i < c; ++i) {
            latent_child_count[parent[i]] += cover_size[i];
            min_child_size[parent[i]] = std::min(min_child_size[parent[i]], cover_size[i]);
            for (int p : members[parent[i]])
                for (int ch : members[i]) lat_edges.push_back({p, ch});
        }

        // Cover-wide measured children: top each cover up to size+1 pure
        // children, and give every non-leaf cover of size k whose smallest
        // latent child cover has size s at least 2k-s+1 of them.  Narrower
        // descendants transmit too little of the cover's loading geometry to
        // pin it, so thinner direct evidence leaves the parametrization
        // redundant and drops covariance dimensions.  Occasionally add
        // extras while the budget allows.
        std::vector<std::pair<int, int>> meas_edges;
        int next_x = 0;
        for (int i = 0; i < c; ++i) {
            int need = std::max(0, cover_size[i] + 1 - latent_child_count[i]);
            if (latent_child_count[i] > 0)
                need = std::max(need, 2 * cover_size[i] - min_child_size[i] + 1);
            while (extra_child(rng)) ++need;
            for (int k = 0; k < need; ++k) {
                for (int p : members[i]) meas_edges.push_back({p, next_x});
                ++next_x;
            }
        }
        if (next_x < 2 || next_x > m_max) continue;

        LatentDag g;
        try {
            g = build_latent_dag(next_x, n, lat_edges, meas_edges);
        } catch (const std::invalid_argument&) {
            continue;
        }
        if (!satisfies_hierarchical(g)) continue;
        if (!(op_min(op_skeleton(g)) == g)) continue;
        return g;
    }
    throw std::runtime_error("random_hierarchical_dag: rejection sampling failed to converge");
}

// ---- benchmark runner ----------------------------------------------------------

namespace {

const char* method_name(BenchmarkMethod m) {
    return m == BenchmarkMethod::Exact ? "exact" : "continuous";
}

struct TrialOutcome {
    bool valid = false;
    double f1 = 0.0;
    double shd = 0.0;
    double seconds = 0.0;
};

void mean_std(const std::vector<double>& xs, double* mean, double* sd) {
    *mean = 0.0;
    *sd = 0.0;
    if (xs.empty()) return;
    for (double x : xs) *mean += x;
    *mean /= static_cast<double>(xs.size());
    if (xs.size() < 2) return;
    double acc = 0.0;
    for (double x : xs) acc += (x - *mean) * (x - *mean);
    *sd = std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

}  // namespace

std::vector<MetricRow> run_benchmark(const BenchmarkConfig& cfg) {
    if (cfg.trials < 1) throw std::invalid_argument("run_benchmark: trials must be >= 1");
    if (cfg.truths.empty()) throw std::invalid_argument("run_benchmark: no ground truths");
    if (cfg.methods.empty()) throw std::invalid_argument("run_benchmark: no methods");
    for (long t : cfg.sample_sizes)
        if (t < 1) throw std::invalid_argument("run_benchmark: sample sizes must be >= 1");

    const int num_truths = static_cast<int>(cfg.truths.size());
    const int num_sizes = static_cast<int>(cfg.sample_sizes.size());
    const int num_methods = static_cast<int>(cfg.methods.size());
    const long num_jobs = static_cast<long>(num_truths) * num_sizes * cfg.trials;

    // outcomes[((truth * sizes + size) * trials + trial) * methods + method]
    std::vector<TrialOutcome> outcomes(num_jobs * num_methods);

    parallel_for(num_jobs, cfg.workers, [&](long job) {
        const int trial = static_cast<int>(job % cfg.trials);
        const int si = static_cast<int>((job / cfg.trials) % num_sizes);
        const int ti = static_cast<int>(job / (static_cast<long>(cfg.trials) * num_sizes));
        const GroundTruth& gt = cfg.truths[ti];
        const long t_samples = cfg.sample_sizes[si];

        // One stream per (seed, truth, sample size, trial) for the data, and
        // a distinct per-method stream for the search internals.
        const uint64_t key = (static_cast<uint64_t>(ti) * 1000003ULL +
                              static_cast<uint64_t>(si)) *
                                 1000003ULL +
                             static_cast<uint64_t>(trial);
        std::mt19937_64 data_rng = make_rng(cfg.seed, 0xDA7A0000ULL + key);
        const SemParameters params = random_parameters(gt.graph, data_rng);
        const Eigen::MatrixXd x = sample_data(params, t_samples, data_rng);
        const Dataset d = Dataset::from_raw(x);

        for (int mi = 0; mi < num_methods; ++mi) {
            TrialOutcome& out = outcomes[job * num_methods + mi];
            SearchConfig sc;
            sc.score_kind = cfg.score_kind;
            sc.fit_options = cfg.fit_options;
            sc.continuous_options = cfg.continuous_options;
            sc.generation_test = cfg.generation_test;
            sc.workers = 1;  // parallelism lives at the trial level
            sc.seed = mix_seed(cfg.seed, 0x5EA2C4 + key * 8 + static_cast<uint64_t>(mi));
            sc.enumeration.m = gt.graph.m();
            sc.enumeration.candidate_cap = cfg.candidate_cap;
            if (cfg.methods[mi] == BenchmarkMethod::Continuous) {
                sc.mode = SearchMode::OneFactorContinuous;
            } else if (satisfies_one_factor(gt.graph)) {
                sc.mode = SearchMode::OneFactorExact;
                sc.enumeration.mode = EnumerationMode::OneFactor;
            } else {
                sc.mode = SearchMode::HierarchicalExact;
                sc.enumeration.mode = EnumerationMode::Hierarchical;
                sc.enumeration.n_max = gt.graph.n();
            }
            const auto t0 = std::chrono::steady_clock::now();
            try {
                const SearchReport report = cfg.methods[mi] == BenchmarkMethod::Continuous
                                                ? continuous_search(d, sc)
                                                : exact_search(d, sc);
                out.f1 = f1_skeleton(report.best.graph, gt.graph);
                out.shd = static_cast<double>(shd_mec(report.best.graph, gt.graph));
                out.valid = true;
            } catch (const std::exception&) {
                out.valid = false;
            }
            out.seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        }
    });

    std::vector<MetricRow> rows;
    rows.reserve(static_cast<size_t>(num_truths) * num_methods * num_sizes);
    for (int ti = 0; ti < num_truths; ++ti)
        for (int mi = 0; mi < num_methods; ++mi)
            for (int si = 0; si < num_sizes; ++si) {
                MetricRow row;
                row.truth_id = cfg.truths[ti].id;
                row.method = method_name(cfg.methods[mi]);
                row.sample_size = cfg.sample_sizes[si];
                std::vector<double> f1s, shds, secs;
                for (int trial = 0; trial < cfg.trials; ++trial) {
                    const long job =
                        (static_cast<long>(ti) * num_sizes + si) * cfg.trials + trial;
                    const TrialOutcome& out = outcomes[job * num_methods + mi];
                    if (!out.valid) {
                        ++row.invalid_trials;
                        continue;
                    }
                    ++row.valid_trials;
                    f1s.push_back(out.f1);
                    shds.push_back(out.shd);
                    secs.push_back(out.seconds);
                }
                mean_std(f1s, &row.f1_mean, &row.f1_std);
                mean_std(shds, &row.shd_mean, &row.shd_std);
                mean_std(secs, &row.runtime_mean, &row.runtime_std);
                rows.push_back(std::move(row));
            }
    return rows;
}

std::string metric_rows_csv(const std::vector<MetricRow>& rows) {
    std::ostringstream os;
    os << "truth,method,sample_size,valid_trials,invalid_trials,"
          "f1_mean,f1_std,shd_mean,shd_std,runtime_mean_s,runtime_std_s\n";
    for (const auto& r : rows) {
        os << r.truth_id << ',' << r.method << ',' << r.sample_size << ',' << r.valid_trials
           << ',' << r.invalid_trials << ',' << format_double(r.f1_mean) << ','
           << format_double(r.f1_std) << ',' << format_double(r.shd_mean) << ','
           << format_double(r.shd_std) << ',' << format_double(r.runtime_mean) << ','
           << format_double(r.runtime_std) << '\n';
    }
    return os.str();
}

std::string metric_rows_table(const std::vector<MetricRow>& rows) {
    // Group rows by truth, preserving first-appearance order.
    std::vector<std::string> truth_order;
    for (const auto& r : rows)
        if (std::find(truth_order.begin(), truth_order.end(), r.truth_id) == truth_order.end())
            truth_order.push_back(r.truth_id);

    std::ostringstream os;
    for (const auto& truth : truth_order) {
        std::vector<std::string> methods;
        std::vector<long> sizes;
        for (const auto& r : rows) {
            if (r.truth_id != truth) continue;
            if (std::find(methods.begin(), methods.end(), r.method) == methods.end())
                methods.push_back(r.method);
            if (std::find(sizes.begin(), sizes.end(), r.sample_size) == sizes.end())
                sizes.push_back(r.sample_size);
        }
        auto find_row = [&](const std::string& method, long t) -> const MetricRow* {
            for (const auto& r : rows)
                if (r.truth_id == truth && r.method == method && r.sample_size == t) return &r;
            return nullptr;
        };
        const struct {
            const char* title;
            double MetricRow::* mean;
            double MetricRow::* sd;
        } metrics[] = {{"skeleton F1", &MetricRow::f1_mean, &MetricRow::f1_std},
                       {"MEC SHD", &MetricRow::shd_mean, &MetricRow::shd_std}};
        for (const auto& metric : metrics) {
            os << "truth: " << truth << " - " << metric.title
               << " (mean +/- std over valid trials)\n";
            os << "  T        ";
            for (const auto& method : methods) {
                char buf[32];
                std::snprintf(buf, sizeof(buf), "%-22s", method.c_str());
                os << buf;
            }
            os << '\n';
            for (long t : sizes) {
                char buf[32];
                std::snprintf(buf, sizeof(buf), "  %-9ld", t);
                os << buf;
                for (const auto& method : methods) {
                    const MetricRow* r = find_row(method, t);
                    char cell[64];
                    if (r == nullptr || r->valid_trials == 0)
                        std::snprintf(cell, sizeof(cell), "%-22s", "-");
                    else
                        std::snprintf(cell, sizeof(cell), "%.3f +/- %.3f (%d)   ", r->*metric.mean,
                                      r->*metric.sd, r->valid_trials);
                    os << cell;
                }
                os << '\n';
            }
            os << '\n';
        }
    }
    return os.str();
}

}  // namespace lvcd
