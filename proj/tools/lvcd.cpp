// Command-line front end for the latent-variable causal discovery library:
// data generation, fitting, scoring, dimension reports, candidate
// enumeration, structure discovery, and benchmark evaluation.
//
// Exit codes: 0 success, 1 internal failure, 2 usage or validation error.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lvcd/covers.hpp"
#include "lvcd/dimension.hpp"
#include "lvcd/enumeration.hpp"
#include "lvcd/eval.hpp"
#include "lvcd/latent_dag.hpp"
#include "lvcd/rng.hpp"
#include "lvcd/scoring.hpp"
#include "lvcd/search.hpp"
#include "lvcd/sem.hpp"

namespace {

using nlohmann::json;

// Default for every --seed flag; all randomized work in a subcommand derives
// from this one value, so repeating an invocation repeats its outputs.
constexpr uint64_t kDefaultSeed = 0;

// ---- file helpers ------------------------------------------------------------

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

// All writes go through a temporary file in the target directory followed by
// a rename, so a failure never leaves a partial output behind.
void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    const fs::path dir = target.parent_path().empty() ? "." : target.parent_path();
    fs::path tmp = dir / (target.filename().string() + ".tmp-" + std::to_string(::getpid()));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        if (!out.flush()) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw std::runtime_error("failed writing " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw std::runtime_error("cannot rename onto " + path + ": " + ec.message());
    }
}

void require_writable_dir(const std::string& path) {
    namespace fs = std::filesystem;
    const fs::path dir = fs::path(path).parent_path();
    if (!dir.empty() && !fs::is_directory(dir))
        throw std::invalid_argument("output directory does not exist: " + dir.string());
}

// ---- data I/O ------------------------------------------------------------------

std::string matrix_to_csv(const Eigen::MatrixXd& x) {
    std::string out;
    char buf[64];
    for (int j = 0; j < x.cols(); ++j) {
        if (j) out += ',';
        out += 'X';
        out += std::to_string(j + 1);
    }
    out += '\n';
    for (int i = 0; i < x.rows(); ++i) {
        for (int j = 0; j < x.cols(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", x(i, j));
            if (j) out += ',';
            out += buf;
        }
        out += '\n';
    }
    return out;
}

// CSV with an X1,...,Xm header, one sample per row.
Eigen::MatrixXd read_matrix_csv(const std::string& path) {
    std::istringstream in(read_file(path));
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> header;
    {
        std::istringstream hs(line);
        std::string cell;
        while (std::getline(hs, cell, ',')) header.push_back(cell);
    }
    const int m = static_cast<int>(header.size());
    for (int j = 0; j < m; ++j)
        if (header[j] != "X" + std::to_string(j + 1))
            throw std::invalid_argument(path + ": expected header X1,...,X" + std::to_string(m) +
                                        " but column " + std::to_string(j + 1) + " is '" +
                                        header[j] + "'");
    std::vector<double> values;
    long rows = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        int cols = 0;
        while (std::getline(ls, cell, ',')) {
            try {
                size_t used = 0;
                values.push_back(std::stod(cell, &used));
                if (used != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw std::invalid_argument(path + ": bad number '" + cell + "' on data row " +
                                            std::to_string(rows + 1));
            }
            ++cols;
        }
        if (cols != m)
            throw std::invalid_argument(path + ": row " + std::to_string(rows + 1) + " has " +
                                        std::to_string(cols) + " columns, expected " +
                                        std::to_string(m));
        ++rows;
    }
    if (rows == 0) throw std::invalid_argument(path + ": no data rows");
    Eigen::MatrixXd x(rows, m);
    for (long i = 0; i < rows; ++i)
        for (int j = 0; j < m; ++j) x(i, j) = values[i * m + j];
    return x;
}

// ---- shared option plumbing ----------------------------------------------------

// A structure source: exactly one of a builtin truth id or a graph JSON file.
struct GraphSource {
    std::string truth;
    std::string file;

    void add_flags(CLI::App* cmd, bool required) {
        auto* t = cmd->add_option("--truth", truth, "Builtin ground-truth id");
        auto* g = cmd->add_option("--graph", file, "Graph JSON file")->check(CLI::ExistingFile);
        t->excludes(g);
        g->excludes(t);
        if (required) cmd->callback([this, cmd] {
            if (truth.empty() && file.empty())
                throw CLI::RequiredError(cmd->get_name() + " needs --truth or --graph");
        });
    }

    lvcd::LatentDag load() const {
        if (!truth.empty()) return lvcd::builtin_ground_truth(truth).graph;
        return lvcd::latent_dag_from_json(read_file(file));
    }
};

// A dataset source: raw sample CSV, or a covariance CSV plus a sample count.
struct DataSource {
    std::string data_file;
    std::string cov_file;
    long cov_samples = 0;

    void add_flags(CLI::App* cmd) {
        auto* d = cmd->add_option("--data", data_file, "Sample CSV (header X1,...,Xm)")
                      ->check(CLI::ExistingFile);
        auto* c = cmd->add_option("--cov", cov_file, "Covariance CSV (header X1,...,Xm)")
                      ->check(CLI::ExistingFile);
        auto* t = cmd->add_option("--cov-samples", cov_samples,
                                  "Sample count the covariance was estimated from");
        d->excludes(c);
        c->excludes(d);
        t->needs(c);
        cmd->callback([this, cmd] {
            if (data_file.empty() && cov_file.empty())
                throw CLI::RequiredError(cmd->get_name() + " needs --data or --cov");
            if (!cov_file.empty() && cov_samples < 1)
                throw CLI::ValidationError("--cov requires --cov-samples >= 1");
        });
    }

    lvcd::Dataset load() const {
        if (!data_file.empty()) return lvcd::Dataset::from_raw(read_matrix_csv(data_file));
        return lvcd::Dataset::from_covariance(read_matrix_csv(cov_file), cov_samples);
    }
};

json graph_json(const lvcd::LatentDag& g) { return json::parse(lvcd::latent_dag_to_json(g)); }

json score_json(const lvcd::Score& s) {
    json j;
    j["kind"] = s.kind == lvcd::ScoreKind::Bic ? "bic" : "dim";
    j["value"] = s.value;
    j["dof"] = s.dof;
    if (s.nll) j["nll"] = *s.nll;
    else j["nll"] = nullptr;
    return j;
}

long dof_for(const lvcd::LatentDag& g) {
    if (lvcd::satisfies_one_factor(g)) return lvcd::dof_one_factor(g);
    if (lvcd::satisfies_hierarchical(g)) return lvcd::dof_hierarchical(g).combinatorial;
    throw std::invalid_argument(
        "structure fits neither the one-factor nor the hierarchical model class");
}

// SearchReport as JSON.  Wall-clock fields are deliberately left out so that
// repeated runs with the same seed write identical files.
json report_json(const lvcd::SearchReport& report, lvcd::ScoreKind kind, const std::string& mode) {
    json j;
    j["mode"] = mode;
    j["score_kind"] = kind == lvcd::ScoreKind::Bic ? "bic" : "dim";
    json best;
    best["graph"] = graph_json(report.best.graph);
    best["graph_id"] = report.best.graph_id;
    best["dof"] = report.best.dof;
    best["nll"] = report.best.nll;
    best["score"] = report.best.score;
    j["best"] = best;
    auto cands = json::array();
    for (const auto& row : report.candidates) {
        json r;
        r["graph_id"] = row.graph_id;
        r["dof"] = row.dof;
        if (std::isnan(row.nll)) r["nll"] = nullptr;
        else r["nll"] = row.nll;
        r["score"] = row.score;
        r["pruned"] = row.pruned;
        cands.push_back(std::move(r));
    }
    j["candidates"] = std::move(cands);
    auto ties = json::array();
    for (const auto& tie : report.ties) {
        json r;
        r["graph"] = graph_json(tie.graph);
        r["graph_id"] = tie.graph_id;
        r["dof"] = tie.dof;
        r["nll"] = tie.nll;
        r["score"] = tie.score;
        ties.push_back(std::move(r));
    }
    j["ties"] = std::move(ties);
    auto restarts = json::array();
    for (const auto& info : report.restarts) {
        json r;
        r["restart"] = info.restart;
        r["repaired"] = info.repaired;
        r["failure"] = info.failure;
        r["residual"] = info.residual;
        r["outer_rounds"] = info.outer_rounds;
        restarts.push_back(std::move(r));
    }
    j["restarts"] = std::move(restarts);
    return j;
}

void print_search_summary(const lvcd::SearchReport& report) {
    std::printf("best: score %.6f, dof %ld, nll %.6f, %d latent(s)\n", report.best.score,
                report.best.dof, report.best.nll, report.best.graph.n());
    long fitted = 0, pruned = 0;
    for (const auto& row : report.candidates) (row.pruned ? pruned : fitted) += 1;
    std::printf("candidates: %ld fitted, %ld pruned, %zu tie(s), %.2fs\n", fitted, pruned,
                report.ties.size(), report.wall_time_seconds);
    std::vector<const lvcd::CandidateRow*> rows;
    for (const auto& row : report.candidates)
        if (!row.pruned) rows.push_back(&row);
    std::sort(rows.begin(), rows.end(),
              [](const auto* a, const auto* b) { return a->score < b->score; });
    const size_t top = std::min<size_t>(rows.size(), 10);
    std::printf("%8s %6s %14s %14s\n", "graph", "dof", "nll", "score");
    for (size_t i = 0; i < top; ++i)
        std::printf("%8ld %6ld %14.4f %14.4f\n", rows[i]->graph_id, rows[i]->dof, rows[i]->nll,
                    rows[i]->score);
}

// ---- subcommand configuration --------------------------------------------------

struct GenerateArgs {
    GraphSource source;
    long samples = 1000;
    uint64_t seed = kDefaultSeed;
    std::string out_data;
    std::string out_params;
    std::string out_graph;
};

struct FitArgs {
    GraphSource source;
    DataSource data;
    lvcd::FitOptions fit;
    uint64_t seed = kDefaultSeed;
    std::string out_params;
};

struct ScoreArgs {
    GraphSource source;
    DataSource data;
    lvcd::FitOptions fit;
    std::string kind = "bic";
    double level = 1e-3;
    uint64_t seed = kDefaultSeed;
    std::string out;
};

struct DofArgs {
    GraphSource source;
    bool numeric = false;
    int draws = 5;
    uint64_t seed = kDefaultSeed;
    std::string out;
};

struct EnumerateArgs {
    int m = 0;
    int n_max = 0;
    std::string mode = "one-factor";
    bool no_dedupe = false;
    long cap = 1000000;
    std::string out;
};

struct DiscoverArgs {
    DataSource data;
    std::string mode = "exact";
    bool hierarchical = false;
    int n_max = 0;
    std::string kind = "bic";
    double lambda = -1.0;  // < 0: library default log(t)/(2t)
    lvcd::ContinuousOptions continuous;
    lvcd::FitOptions fit;
    long cap = 1000000;
    int workers = 0;
    uint64_t seed = kDefaultSeed;
    std::string out_graph;
    std::string out_report;
};

struct EvalArgs {
    std::vector<std::string> truths;
    std::string truth_class = "one-factor";
    std::vector<long> sizes;
    int trials = 3;
    std::vector<std::string> methods;
    lvcd::FitOptions fit;
    lvcd::ContinuousOptions continuous;
    long cap = 1000000;
    int workers = 0;
    uint64_t seed = kDefaultSeed;
    std::string out_csv;
};

void run_generate(const GenerateArgs& a) {
    for (const std::string& p : {a.out_data, a.out_params, a.out_graph})
        if (!p.empty()) require_writable_dir(p);
    const lvcd::LatentDag g = a.source.load();
    auto rng = lvcd::make_rng(a.seed);
    const lvcd::SemParameters params = lvcd::random_parameters(g, rng);
    const Eigen::MatrixXd x = lvcd::sample_data(params, static_cast<int>(a.samples), rng);
    write_file_atomic(a.out_data, matrix_to_csv(x));
    if (!a.out_params.empty()) write_file_atomic(a.out_params, lvcd::sem_parameters_to_json(params));
    if (!a.out_graph.empty()) write_file_atomic(a.out_graph, lvcd::latent_dag_to_json(g));
    std::printf("wrote %s (%ld samples x %d variables)\n", a.out_data.c_str(), a.samples, g.m());
}

void run_fit(FitArgs& a) {
    if (!a.out_params.empty()) require_writable_dir(a.out_params);
    const lvcd::LatentDag g = a.source.load();
    const lvcd::Dataset d = a.data.load();
    a.fit.seed = a.seed;
    const lvcd::FitResult fit = lvcd::fit_ml(g, d, a.fit);
    json j;
    j["nll"] = fit.nll;
    j["saturated_nll"] = lvcd::saturated_nll(d);
    j["converged"] = fit.converged;
    j["restarts_used"] = fit.restarts_used;
    if (!a.out_params.empty())
        write_file_atomic(a.out_params, lvcd::sem_parameters_to_json(fit.params));
    std::printf("%s\n", j.dump(2).c_str());
}

void run_score(ScoreArgs& a) {
    if (!a.out.empty()) require_writable_dir(a.out);
    const lvcd::LatentDag g = a.source.load();
    const lvcd::Dataset d = a.data.load();
    a.fit.seed = a.seed;
    const long dof = dof_for(g);
    const lvcd::FitResult fit = lvcd::fit_ml(g, d, a.fit);
    lvcd::Score s;
    if (a.kind == "bic") {
        s = lvcd::bic(g, d, dof, fit);
    } else {
        lvcd::GenerationTestConfig gen;
        gen.level = a.level;
        s = lvcd::score_dim(g, d, dof, fit, gen);
    }
    const std::string text = score_json(s).dump(2);
    if (!a.out.empty()) write_file_atomic(a.out, text);
    std::printf("%s\n", text.c_str());
}

void run_dof(const DofArgs& a) {
    if (!a.out.empty()) require_writable_dir(a.out);
    const lvcd::LatentDag g = a.source.load();
    if (!lvcd::satisfies_hierarchical(g))
        throw std::invalid_argument("structure violates the hierarchical model assumptions");
    const lvcd::DofReport report = lvcd::dof_hierarchical(g);
    json j;
    j["combinatorial"] = report.combinatorial;
    j["upper_bound"] = lvcd::dof_upper_bound(g);
    if (a.numeric) {
        auto rng = lvcd::make_rng(a.seed);
        j["numeric"] = lvcd::dof_numeric(g, a.draws, rng);
    } else {
        j["numeric"] = nullptr;
    }
    auto reds = json::array();
    for (const auto& r : report.reductions) {
        json red;
        red["latents"] = r.latents;
        red["deduction"] = r.deduction;
        reds.push_back(std::move(red));
    }
    j["reductions"] = std::move(reds);
    const std::string text = j.dump(2);
    if (!a.out.empty()) write_file_atomic(a.out, text);
    std::printf("%s\n", text.c_str());
}

void run_enumerate(const EnumerateArgs& a) {
    if (!a.out.empty()) require_writable_dir(a.out);
    lvcd::EnumerationConfig cfg;
    cfg.m = a.m;
    cfg.n_max = a.n_max;
    cfg.dedupe = !a.no_dedupe;
    cfg.candidate_cap = a.cap;
    std::vector<lvcd::LatentDag> graphs;
    if (a.mode == "one-factor") {
        cfg.mode = lvcd::EnumerationMode::OneFactor;
        graphs = lvcd::enumerate_one_factor(cfg);
    } else {
        if (a.n_max < 1)
            throw std::invalid_argument("--mode hierarchical requires --n-max >= 1");
        cfg.mode = lvcd::EnumerationMode::Hierarchical;
        graphs = lvcd::enumerate_hierarchical(cfg);
    }
    std::string lines;
    for (const auto& g : graphs) {
        lines += graph_json(g).dump();
        lines += '\n';
    }
    if (!a.out.empty()) {
        write_file_atomic(a.out, lines);
        std::printf("wrote %zu structure(s) to %s\n", graphs.size(), a.out.c_str());
    } else {
        std::fputs(lines.c_str(), stdout);
    }
}

void run_discover(DiscoverArgs& a) {
    for (const std::string& p : {a.out_graph, a.out_report})
        if (!p.empty()) require_writable_dir(p);
    const lvcd::Dataset d = a.data.load();

    lvcd::SearchConfig cfg;
    cfg.score_kind = a.kind == "bic" ? lvcd::ScoreKind::Bic : lvcd::ScoreKind::Dim;
    cfg.fit_options = a.fit;
    cfg.continuous_options = a.continuous;
    if (a.lambda >= 0.0) cfg.continuous_options.lambda = a.lambda;
    cfg.enumeration.m = d.m();
    cfg.enumeration.candidate_cap = a.cap;
    cfg.workers = a.workers;
    cfg.seed = a.seed;

    std::string mode_name;
    if (a.mode == "continuous") {
        if (a.hierarchical)
            throw std::invalid_argument("--mode continuous only supports the one-factor class");
        if (d.m() < 3)
            throw std::invalid_argument(
                "continuous mode needs at least 3 measured variables (no one-factor structure "
                "exists below 3)");
        cfg.mode = lvcd::SearchMode::OneFactorContinuous;
        mode_name = "continuous";
    } else if (a.hierarchical) {
        if (a.n_max < 1)
            throw std::invalid_argument("--hierarchical requires --n-max >= 1");
        cfg.mode = lvcd::SearchMode::HierarchicalExact;
        cfg.enumeration.mode = lvcd::EnumerationMode::Hierarchical;
        cfg.enumeration.n_max = a.n_max;
        mode_name = "exact-hierarchical";
    } else {
        cfg.mode = lvcd::SearchMode::OneFactorExact;
        if (a.n_max > 0) cfg.enumeration.n_max = a.n_max;
        mode_name = "exact-one-factor";
    }

    const lvcd::SearchReport report = a.mode == "continuous" ? lvcd::continuous_search(d, cfg)
                                                             : lvcd::exact_search(d, cfg);
    if (!a.out_graph.empty())
        write_file_atomic(a.out_graph, lvcd::latent_dag_to_json(report.best.graph));
    if (!a.out_report.empty())
        write_file_atomic(a.out_report, report_json(report, cfg.score_kind, mode_name).dump(2));
    print_search_summary(report);
}

void run_eval(EvalArgs& a) {
    if (!a.out_csv.empty()) require_writable_dir(a.out_csv);
    lvcd::BenchmarkConfig cfg;
    if (a.truths.empty()) {
        if (a.truth_class == "one-factor" || a.truth_class == "all")
            for (auto& gt : lvcd::builtin_ground_truths(lvcd::TruthClass::OneFactor))
                cfg.truths.push_back(std::move(gt));
        if (a.truth_class == "hierarchical" || a.truth_class == "all")
            for (auto& gt : lvcd::builtin_ground_truths(lvcd::TruthClass::Hierarchical))
                cfg.truths.push_back(std::move(gt));
    } else {
        for (const std::string& name : a.truths) {
            if (std::filesystem::exists(name)) {
                lvcd::GroundTruth gt;
                gt.id = std::filesystem::path(name).stem().string();
                gt.graph = lvcd::latent_dag_from_json(read_file(name));
                cfg.truths.push_back(std::move(gt));
            } else {
                cfg.truths.push_back(lvcd::builtin_ground_truth(name));
            }
        }
    }
    if (!a.sizes.empty()) cfg.sample_sizes = a.sizes;
    cfg.trials = a.trials;
    if (!a.methods.empty()) {
        cfg.methods.clear();
        for (const std::string& mth : a.methods)
            cfg.methods.push_back(mth == "exact" ? lvcd::BenchmarkMethod::Exact
                                                 : lvcd::BenchmarkMethod::Continuous);
    }
    cfg.fit_options = a.fit;
    cfg.continuous_options = a.continuous;
    cfg.candidate_cap = a.cap;
    cfg.workers = a.workers;
    cfg.seed = a.seed;

    const auto rows = lvcd::run_benchmark(cfg);
    if (!a.out_csv.empty()) write_file_atomic(a.out_csv, lvcd::metric_rows_csv(rows));
    std::printf("%s", lvcd::metric_rows_table(rows).c_str());
}

void add_fit_flags(CLI::App* cmd, lvcd::FitOptions* fit) {
    cmd->add_option("--fit-restarts", fit->restarts, "Random restarts per likelihood fit")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--fit-iterations", fit->max_iterations, "Quasi-Newton iteration cap")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
}

void add_continuous_flags(CLI::App* cmd, lvcd::ContinuousOptions* opt) {
    cmd->add_option("--restarts", opt->restarts, "Continuous-search restarts")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--iterations", opt->iterations, "First-order steps per solve")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Score-based structure discovery for linear-Gaussian latent-variable models"};
    app.require_subcommand(1);
    app.set_config("--config", "",
                   "key=value options file; [section] headers select a subcommand; "
                   "command-line flags win over file values");

    GenerateArgs gen;
    FitArgs fit;
    ScoreArgs score;
    DofArgs dof;
    EnumerateArgs enumerate;
    DiscoverArgs discover;
    EvalArgs eval;

    {
        auto* cmd = app.add_subcommand("generate",
                                       "Draw random parameters for a structure and sample data");
        gen.source.add_flags(cmd, true);
        cmd->add_option("-T,--samples", gen.samples, "Rows to sample")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        cmd->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
        cmd->add_option("--out-data", gen.out_data, "Output CSV path")->required();
        cmd->add_option("--out-params", gen.out_params, "Optional parameters JSON path");
        cmd->add_option("--out-graph", gen.out_graph, "Optional graph JSON path");
        cmd->final_callback([&gen] { run_generate(gen); });
    }
    {
        auto* cmd = app.add_subcommand("fit", "Maximum-likelihood fit of a structure to data");
        fit.source.add_flags(cmd, true);
        fit.data.add_flags(cmd);
        add_fit_flags(cmd, &fit.fit);
        cmd->add_option("--seed", fit.seed, "Random seed")->capture_default_str();
        cmd->add_option("--out-params", fit.out_params, "Fitted parameters JSON path");
        cmd->final_callback([&fit] { run_fit(fit); });
    }
    {
        auto* cmd = app.add_subcommand("score", "Score a structure against data");
        score.source.add_flags(cmd, true);
        score.data.add_flags(cmd);
        add_fit_flags(cmd, &score.fit);
        cmd->add_option("--score", score.kind, "Score kind")
            ->check(CLI::IsMember({"bic", "dim"}))
            ->capture_default_str();
        cmd->add_option("--level", score.level, "Generation-test level for --score dim")
            ->capture_default_str();
        cmd->add_option("--seed", score.seed, "Random seed")->capture_default_str();
        cmd->add_option("--out", score.out, "Optional score JSON path");
        cmd->final_callback([&score] { run_score(score); });
    }
    {
        auto* cmd = app.add_subcommand("dof", "Model-dimension report for a structure");
        dof.source.add_flags(cmd, true);
        cmd->add_flag("--numeric", dof.numeric, "Also compute the Jacobian-rank dimension");
        cmd->add_option("--draws", dof.draws, "Parameter draws for --numeric")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        cmd->add_option("--seed", dof.seed, "Random seed")->capture_default_str();
        cmd->add_option("--out", dof.out, "Optional report JSON path");
        cmd->final_callback([&dof] { run_dof(dof); });
    }
    {
        auto* cmd = app.add_subcommand("enumerate", "List candidate structures as JSON lines");
        cmd->add_option("--m", enumerate.m, "Measured variable count")
            ->required()
            ->check(CLI::PositiveNumber);
        cmd->add_option("--n-max", enumerate.n_max,
                        "Largest latent count (0 = mode default; required for hierarchical)")
            ->capture_default_str();
        cmd->add_option("--mode", enumerate.mode, "Candidate class")
            ->check(CLI::IsMember({"one-factor", "hierarchical"}))
            ->capture_default_str();
        cmd->add_flag("--no-dedupe", enumerate.no_dedupe,
                      "Keep every representative instead of one per equivalence class");
        cmd->add_option("--cap", enumerate.cap, "Candidate-count guard")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        cmd->add_option("--out", enumerate.out, "Output path (default: stdout)");
        cmd->final_callback([&enumerate] { run_enumerate(enumerate); });
    }
    {
        auto* cmd = app.add_subcommand("discover", "Search for the best-scoring structure");
        discover.data.add_flags(cmd);
        cmd->add_option("--mode", discover.mode, "Search strategy")
            ->check(CLI::IsMember({"exact", "continuous"}))
            ->capture_default_str();
        cmd->add_flag("--hierarchical", discover.hierarchical,
                      "Search the hierarchical class (exact mode only)");
        cmd->add_option("--n-max", discover.n_max, "Largest latent count for the candidate set")
            ->capture_default_str();
        cmd->add_option("--score", discover.kind, "Score kind")
            ->check(CLI::IsMember({"bic", "dim"}))
            ->capture_default_str();
        cmd->add_option("--lambda", discover.lambda,
                        "Sparsity weight for continuous mode (default: log(T)/(2T))");
        add_continuous_flags(cmd, &discover.continuous);
        add_fit_flags(cmd, &discover.fit);
        cmd->add_option("--cap", discover.cap, "Candidate-count guard")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        cmd->add_option("--workers", discover.workers, "Worker threads (0 = all available cores)")
            ->capture_default_str();
        cmd->add_option("--seed", discover.seed, "Random seed")->capture_default_str();
        cmd->add_option("--out-graph", discover.out_graph, "Best structure JSON path");
        cmd->add_option("--out-report", discover.out_report, "Search report JSON path");
        cmd->final_callback([&discover] { run_discover(discover); });
    }
    {
        auto* cmd = app.add_subcommand("eval", "Benchmark methods on ground-truth structures");
        cmd->add_option("--truth", eval.truths,
                        "Builtin truth id or graph JSON file (repeatable)");
        cmd->add_option("--truth-class", eval.truth_class,
                        "Builtin truths to use when --truth is absent")
            ->check(CLI::IsMember({"one-factor", "hierarchical", "all"}))
            ->capture_default_str();
        cmd->add_option("--sizes", eval.sizes, "Sample sizes (default 100 300 1000 3000 10000)")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--trials", eval.trials, "Trials per (truth, size)")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        cmd->add_option("--methods", eval.methods, "Methods to run (default both)")
            ->check(CLI::IsMember({"exact", "continuous"}));
        add_continuous_flags(cmd, &eval.continuous);
        add_fit_flags(cmd, &eval.fit);
        cmd->add_option("--cap", eval.cap, "Candidate-count guard")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        cmd->add_option("--workers", eval.workers, "Worker threads (0 = all available cores)")
            ->capture_default_str();
        cmd->add_option("--seed", eval.seed, "Random seed")->capture_default_str();
        cmd->add_option("--out-csv", eval.out_csv, "Metrics CSV path");
        cmd->final_callback([&eval] { run_eval(eval); });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
