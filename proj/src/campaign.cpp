// Copyright 2026 The cvsense Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at

//     http://www.apache.org/licenses/LICENSE-2.0

// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "cvsense/campaign.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "cvsense/error.hpp"
#include "cvsense/seeding.hpp"
#include "json_util.hpp"

namespace cvsense {

namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;
using std::numbers::pi;

// Reads the fields of one JSON object and rejects the ones never asked for.
class ObjectReader {
  public:
    ObjectReader(const Json &j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) {
            fail(ErrorCode::Config, path_ + " must be an object");
        }
    }

    template <typename T>
    bool get(const char *key, T &out) {
        const Json *v = find(key);
        if (v == nullptr) {
            return false;
        }
        try {
            out = v->get<T>();
        } catch (const nlohmann::json::exception &) {
            fail(ErrorCode::Config, name(key) + " has the wrong type");
        }
        return true;
    }

    const Json *find(const char *key) {
        seen_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    [[nodiscard]] std::string name(const char *key) const { return path_ + "." + key; }

    void finish() const {
        for (const auto &item : j_.items()) {
            if (seen_.count(item.key()) == 0) {
                fail(ErrorCode::Config, "unknown field " + path_ + "." + item.key());
            }
        }
    }

  private:
    const Json &j_;
    std::string path_;
    std::set<std::string> seen_;
};

std::uint64_t read_seed(const Json &v) {
    if (!v.is_number_unsigned()) {
        fail(ErrorCode::Config, "seed values must be non-negative integers");
    }
    return v.get<std::uint64_t>();
}

LogNormalPrior read_prior(const Json &j, const std::string &path) {
    ObjectReader r(j, path);
    LogNormalPrior p;
    require(r.get("mean_log", p.mean_log), path + ".mean_log is required", ErrorCode::Config);
    require(r.get("std_log", p.std_log), path + ".std_log is required", ErrorCode::Config);
    r.finish();
    return p;
}

Json prior_json(const LogNormalPrior &p) {
    Json j;
    j["mean_log"] = p.mean_log;
    j["std_log"] = p.std_log;
    return j;
}

CampaignMode parse_mode(const std::string &s) {
    if (s == "gd") {
        return CampaignMode::GD;
    }
    if (s == "bo") {
        return CampaignMode::BO;
    }
    if (s == "gd-then-bo") {
        return CampaignMode::GDThenBO;
    }
    if (s == "landscape") {
        return CampaignMode::Landscape;
    }
    fail(ErrorCode::Config, "unknown mode '" + s + "' (expected gd, bo, gd-then-bo or landscape)");
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::ofstream open_output(const fs::path &path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        fail(ErrorCode::Io, "cannot write '" + path.string() + "'");
    }
    return out;
}

void check_stream(const std::ofstream &out, const fs::path &path) {
    if (!out) {
        fail(ErrorCode::Io, "write to '" + path.string() + "' failed");
    }
}

// Streams records to disk as they arrive so an aborted run leaves a
// readable partial trace.
class TraceWriter {
  public:
    TraceWriter(const fs::path &path, const TraceHeader &header) : path_(path), out_(open_output(path)) {
        file_.header = header;
        file_.trace.optimizer = header.optimizer;
        write_trace_header(out_, header);
        out_.flush();
        check_stream(out_, path_);
    }

    void append(const EpochRecord &rec) {
        write_trace_record(out_, rec);
        out_.flush();
        check_stream(out_, path_);
        file_.trace.records.push_back(rec);
    }

    [[nodiscard]] const TraceFile &file() const { return file_; }

  private:
    fs::path path_;
    std::ofstream out_;
    TraceFile file_;
};

struct RunContext {
    const CampaignConfig &cfg;
    std::uint64_t seed;
    fs::path dir;
    BenchConfig bench;
    Json files = Json::array();
};

OptimizationTrace run_gd_stage(RunContext &ctx, VirtualBench &bench, RunResult &res) {
    TraceHeader header;
    header.optimizer = "gd";
    header.seed = ctx.seed;
    header.bench = ctx.bench;
    ctx.files.push_back("gd_trace.ndjson");
    TraceWriter writer(ctx.dir / "gd_trace.ndjson", header);
    OptimizationTrace trace = run_gradient_descent(bench, ctx.cfg.gd, ctx.cfg.perturbations,
                                                   [&](const EpochRecord &r) { writer.append(r); });
    res.gd_summary = summarize(writer.file());
    return trace;
}

void run_bo_stage(RunContext &ctx, VirtualBench &bench, const OptimizationTrace *gd_trace, RunResult &res) {
    const BOCampaignConfig &bo = ctx.cfg.bo;
    const CostOracle oracle = bo.analytic_oracle ? analytic_oracle(ctx.bench) : bench_oracle(bench, bo.n_samples);

    std::vector<WarmPoint> warm;
    if (gd_trace != nullptr) {
        warm = warm_points_from(*gd_trace);
    }
    res.warm_start_from_gd = static_cast<int>(warm.size());
    res.warm_start_random = bo.warm_start_random.value_or(std::max(0, bo.warm_start_total - res.warm_start_from_gd));
    long long warm_measurements = 0;
    const std::vector<WarmPoint> random = random_warm_start(oracle, res.warm_start_random,
                                                            derive_seed(ctx.seed, "warm_start"), &warm_measurements);
    warm.insert(warm.end(), random.begin(), random.end());

    TraceHeader header;
    header.optimizer = "bo";
    header.seed = ctx.seed;
    header.bench = ctx.bench;
    header.warm_start_size = static_cast<int>(warm.size());
    header.warm_start_from_gd = res.warm_start_from_gd;
    header.warm_start_random = res.warm_start_random;
    header.warm_start_measurements = warm_measurements;
    header.warm_start_best_cost = std::numeric_limits<double>::infinity();
    for (const auto &w : warm) {
        if (std::isfinite(w.cost)) {
            header.warm_start_best_cost = std::min(header.warm_start_best_cost, w.cost);
        }
    }
    ctx.files.push_back("bo_trace.ndjson");
    TraceWriter writer(ctx.dir / "bo_trace.ndjson", header);

    BOConfig opt = bo.optimizer;
    opt.seed = derive_seed(ctx.seed, "bo");
    (void)run_bayesian_optimization(oracle, warm, opt, [&](const EpochRecord &r) { writer.append(r); });
    if (!writer.file().trace.records.empty()) {
        res.bo_summary = summarize(writer.file());
    }
}

void run_landscape_stage(RunContext &ctx, const OptimizationTrace &overlay, RunResult &res) {
    const std::vector<LandscapePoint> grid = cost_landscape(ctx.bench, ctx.cfg.landscape);
    const fs::path grid_path = ctx.dir / "landscape.csv";
    std::ofstream out = open_output(grid_path);
    out << "phi_hd,phi_alpha,true_cost\n";
    LandscapePoint best{0.0, 0.0, std::numeric_limits<double>::infinity()};
    for (const auto &p : grid) {
        out << format_double(p.phi_hd) << ',' << format_double(p.phi_alpha) << ',' << format_double(p.true_cost)
            << '\n';
        if (p.true_cost < best.true_cost) {
            best = p;
        }
    }
    check_stream(out, grid_path);
    ctx.files.push_back("landscape.csv");
    res.landscape_minimum = best;

    const fs::path overlay_path = ctx.dir / "landscape_overlay.csv";
    std::ofstream ov = open_output(overlay_path);
    ov << "epoch,phi_hd,phi_alpha,cost,true_cost,event\n";
    for (const auto &r : overlay.records) {
        ov << r.epoch << ',' << format_double(r.phi_hd) << ',' << format_double(r.phi_alpha) << ','
           << format_double(r.cost) << ',' << format_double(r.true_cost) << ',' << r.event << '\n';
    }
    check_stream(ov, overlay_path);
    ctx.files.push_back("landscape_overlay.csv");
}

Json manifest_json(const RunContext &ctx, const RunResult &res) {
    Json m;
    m["schema_version"] = kTraceSchemaVersion;
    m["version"] = kVersion;
    m["status"] = res.ok ? "ok" : "error";
    if (res.ok) {
        m["error"] = nullptr;
    } else {
        Json e;
        e["code"] = static_cast<int>(res.error_code);
        e["message"] = res.error;
        m["error"] = std::move(e);
    }
    m["seed"] = ctx.seed;
    Json seeds;
    seeds["bench"] = derive_seed(ctx.seed, "bench");
    seeds["warm_start"] = derive_seed(ctx.seed, "warm_start");
    seeds["bo"] = derive_seed(ctx.seed, "bo");
    m["derived_seeds"] = std::move(seeds);
    m["config"] = Json::parse(campaign_to_json(ctx.cfg));
    if (ctx.cfg.mode == CampaignMode::BO || ctx.cfg.mode == CampaignMode::GDThenBO) {
        Json w;
        w["from_gd"] = res.warm_start_from_gd;
        w["random"] = res.warm_start_random;
        w["total"] = res.warm_start_from_gd + res.warm_start_random;
        m["warm_start"] = std::move(w);
    }
    m["files"] = ctx.files;
    Json summaries = Json::object();
    if (res.gd_summary) {
        summaries["gd"] = summary_to_json(*res.gd_summary);
    }
    if (res.bo_summary) {
        summaries["bo"] = summary_to_json(*res.bo_summary);
    }
    m["summaries"] = std::move(summaries);
    if (res.landscape_minimum) {
        Json lm;
        lm["phi_hd"] = res.landscape_minimum->phi_hd;
        lm["phi_alpha"] = res.landscape_minimum->phi_alpha;
        lm["true_cost"] = res.landscape_minimum->true_cost;
        m["landscape_minimum"] = std::move(lm);
    }
    return m;
}

} // namespace

std::string to_string(CampaignMode mode) {
    switch (mode) {
    case CampaignMode::GD:
        return "gd";
    case CampaignMode::BO:
        return "bo";
    case CampaignMode::GDThenBO:
        return "gd-then-bo";
    case CampaignMode::Landscape:
        return "landscape";
    }
    return "gd";
}

void CampaignConfig::validate() const {
    require(!seeds.empty(), "a campaign needs at least one seed", ErrorCode::Config);
    require(std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() == seeds.size(), "seeds must be distinct",
            ErrorCode::Config);
    bench.validate();
    gd.validate();
    bo.optimizer.validate();
    require(bo.warm_start_total >= 0, "bo.warm_start_total must be >= 0", ErrorCode::Config);
    require(!bo.warm_start_random || *bo.warm_start_random >= 0, "bo.warm_start_random must be >= 0",
            ErrorCode::Config);
    require(bo.n_samples >= 2, "bo.n_samples must be at least 2", ErrorCode::Config);
    if (mode == CampaignMode::BO) {
        require(bo.warm_start_random.value_or(bo.warm_start_total) >= 2,
                "bo mode needs at least two random warm-start points", ErrorCode::Config);
    }
    require(landscape.grid_size >= 2, "landscape.grid_size must be at least 2", ErrorCode::Config);
    for (const auto &p : perturbations) {
        require(p.epoch >= 1, "perturbation epochs start at 1", ErrorCode::Config);
        require(std::isfinite(p.d_phi_hd) && std::isfinite(p.d_phi_alpha), "perturbation offsets must be finite",
                ErrorCode::Config);
    }
    require(!out_dir.empty(), "output.dir must not be empty", ErrorCode::Config);
}

CampaignConfig parse_campaign(const std::string &text) {
    Json root;
    try {
        root = Json::parse(text, nullptr, true, true);
    } catch (const nlohmann::json::parse_error &e) {
        fail(ErrorCode::Config, std::string("config is not valid JSON: ") + e.what());
    }
    CampaignConfig cfg;
    ObjectReader top(root, "config");

    const Json *seed = top.find("seed");
    require(seed != nullptr, "config.seed is required", ErrorCode::Config);
    if (seed->is_array()) {
        for (const auto &s : *seed) {
            cfg.seeds.push_back(read_seed(s));
        }
    } else {
        cfg.seeds.push_back(read_seed(*seed));
    }

    std::string mode = "gd";
    top.get("mode", mode);
    cfg.mode = parse_mode(mode);

    if (const Json *b = top.find("bench")) {
        require(!b->is_object() || !b->contains("rng_seed"), "bench.rng_seed is derived from the campaign seed",
                ErrorCode::Config);
        cfg.bench = bench_from_json(*b);
    }
    cfg.gd.n_samples = cfg.bench.samples_per_measurement;
    cfg.bo.n_samples = cfg.bench.samples_per_measurement;

    if (const Json *g = top.find("gd")) {
        ObjectReader r(*g, "gd");
        r.get("learning_rate", cfg.gd.learning_rate);
        r.get("epochs", cfg.gd.epochs);
        std::vector<double> initial;
        if (r.get("initial", initial)) {
            require(initial.size() == 2, "gd.initial must be [phi_hd, phi_alpha]", ErrorCode::Config);
            cfg.gd.initial = {initial[0], initial[1]};
        }
        r.get("n_samples", cfg.gd.n_samples);
        r.get("max_step", cfg.gd.max_step);
        std::string schedule;
        if (r.get("gradient_schedule", schedule)) {
            if (schedule == "compact") {
                cfg.gd.schedule = DisplacementGradientSchedule::Compact;
            } else if (schedule == "full") {
                cfg.gd.schedule = DisplacementGradientSchedule::Full;
            } else {
                fail(ErrorCode::Config, "gd.gradient_schedule must be 'compact' or 'full'");
            }
        }
        r.finish();
    }

    if (const Json *b = top.find("bo")) {
        ObjectReader r(*b, "bo");
        BOCampaignConfig &bo = cfg.bo;
        if (r.get("prior_preset", bo.prior_preset)) {
            bo.optimizer.priors = prior_preset(bo.prior_preset);
        }
        if (const Json *p = r.find("lengthscale_prior")) {
            bo.optimizer.priors.lengthscale = read_prior(*p, "bo.lengthscale_prior");
        }
        if (const Json *p = r.find("output_scale_prior")) {
            if (p->is_null()) {
                bo.optimizer.priors.output_scale.reset();
            } else {
                bo.optimizer.priors.output_scale = read_prior(*p, "bo.output_scale_prior");
            }
        }
        r.get("epochs", bo.optimizer.epochs);
        r.get("grid_size", bo.optimizer.grid_size);
        r.get("log_outputs", bo.optimizer.log_outputs);
        r.get("fit_starts", bo.optimizer.fit_starts);
        r.get("refit_starts", bo.optimizer.refit_starts);
        r.get("max_fit_iterations", bo.optimizer.max_fit_iterations);
        r.get("exclude_queried", bo.optimizer.exclude_queried);
        r.get("warm_start_total", bo.warm_start_total);
        if (const Json *w = r.find("warm_start_random"); w != nullptr && !w->is_null()) {
            require(w->is_number_integer(), "bo.warm_start_random must be an integer", ErrorCode::Config);
            bo.warm_start_random = w->get<int>();
        }
        std::string oracle;
        if (r.get("oracle", oracle)) {
            require(oracle == "bench" || oracle == "analytic", "bo.oracle must be 'bench' or 'analytic'",
                    ErrorCode::Config);
            bo.analytic_oracle = oracle == "analytic";
        }
        r.get("n_samples", bo.n_samples);
        r.finish();
    }

    if (const Json *list = top.find("perturbations")) {
        require(list->is_array(), "perturbations must be an array", ErrorCode::Config);
        for (std::size_t i = 0; i < list->size(); ++i) {
            ObjectReader r((*list)[i], "perturbations[" + std::to_string(i) + "]");
            Perturbation p;
            require(r.get("epoch", p.epoch), r.name("epoch") + " is required", ErrorCode::Config);
            std::string kind = "kick";
            r.get("kind", kind);
            if (kind == "kick") {
                p.kind = PerturbationKind::Kick;
            } else if (kind == "drift") {
                p.kind = PerturbationKind::DriftRate;
            } else {
                fail(ErrorCode::Config, r.name("kind") + " must be 'kick' or 'drift'");
            }
            r.get("d_phi_hd", p.d_phi_hd);
            r.get("d_phi_alpha", p.d_phi_alpha);
            r.finish();
            cfg.perturbations.push_back(p);
        }
    }

    if (const Json *l = top.find("landscape")) {
        ObjectReader r(*l, "landscape");
        r.get("grid_size", cfg.landscape.grid_size);
        r.get("include_phase_noise", cfg.landscape.include_phase_noise);
        r.finish();
    }

    if (const Json *o = top.find("output")) {
        ObjectReader r(*o, "output");
        r.get("dir", cfg.out_dir);
        r.finish();
    }
    top.finish();
    cfg.validate();
    return cfg;
}

CampaignConfig load_campaign(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::Io, "cannot open config '" + path + "'");
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse_campaign(text.str());
}

std::string campaign_to_json(const CampaignConfig &cfg) {
    Json j;
    if (cfg.seeds.size() == 1) {
        j["seed"] = cfg.seeds.front();
    } else {
        j["seed"] = cfg.seeds;
    }
    j["mode"] = to_string(cfg.mode);
    Json bench = bench_to_json(cfg.bench);
    bench.erase("rng_seed");
    j["bench"] = std::move(bench);

    Json gd;
    gd["learning_rate"] = cfg.gd.learning_rate;
    gd["epochs"] = cfg.gd.epochs;
    gd["initial"] = {cfg.gd.initial.phi_hd, cfg.gd.initial.phi_alpha};
    gd["n_samples"] = cfg.gd.n_samples;
    gd["max_step"] = cfg.gd.max_step;
    gd["gradient_schedule"] = cfg.gd.schedule == DisplacementGradientSchedule::Full ? "full" : "compact";
    j["gd"] = std::move(gd);

    const BOCampaignConfig &b = cfg.bo;
    Json bo;
    bo["prior_preset"] = b.prior_preset;
    bo["lengthscale_prior"] = prior_json(b.optimizer.priors.lengthscale);
    bo["output_scale_prior"] = b.optimizer.priors.output_scale ? prior_json(*b.optimizer.priors.output_scale)
                                                                : Json(nullptr);
    bo["epochs"] = b.optimizer.epochs;
    bo["grid_size"] = b.optimizer.grid_size;
    bo["log_outputs"] = b.optimizer.log_outputs;
    bo["fit_starts"] = b.optimizer.fit_starts;
    bo["refit_starts"] = b.optimizer.refit_starts;
    bo["max_fit_iterations"] = b.optimizer.max_fit_iterations;
    bo["exclude_queried"] = b.optimizer.exclude_queried;
    bo["warm_start_total"] = b.warm_start_total;
    bo["warm_start_random"] = b.warm_start_random ? Json(*b.warm_start_random) : Json(nullptr);
    bo["oracle"] = b.analytic_oracle ? "analytic" : "bench";
    bo["n_samples"] = b.n_samples;
    j["bo"] = std::move(bo);

    Json perturbations = Json::array();
    for (const auto &p : cfg.perturbations) {
        Json pj;
        pj["epoch"] = p.epoch;
        pj["kind"] = p.kind == PerturbationKind::Kick ? "kick" : "drift";
        pj["d_phi_hd"] = p.d_phi_hd;
        pj["d_phi_alpha"] = p.d_phi_alpha;
        perturbations.push_back(std::move(pj));
    }
    j["perturbations"] = std::move(perturbations);

    Json landscape;
    landscape["grid_size"] = cfg.landscape.grid_size;
    landscape["include_phase_noise"] = cfg.landscape.include_phase_noise;
    j["landscape"] = std::move(landscape);

    Json output;
    output["dir"] = cfg.out_dir;
    j["output"] = std::move(output);
    return j.dump(2);
}

std::vector<LandscapePoint> cost_landscape(const BenchConfig &bench, const LandscapeConfig &cfg) {
    require(cfg.grid_size >= 2, "landscape grid needs at least two points per axis", ErrorCode::Config);
    const int n = cfg.grid_size;
    std::vector<LandscapePoint> out;
    out.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        const double pa = -pi + 2.0 * pi * j / (n - 1);
        for (int i = 0; i < n; ++i) {
            const double hd = -pi + 2.0 * pi * i / (n - 1);
            out.push_back({hd, pa, true_cost(bench, hd, pa, cfg.include_phase_noise)});
        }
    }
    return out;
}

RunResult run_single(const CampaignConfig &cfg, std::uint64_t seed, const std::string &dir) {
    RunResult res;
    res.seed = seed;
    res.dir = dir;
    RunContext ctx{cfg, seed, fs::path(dir), cfg.bench};
    ctx.bench.rng_seed = derive_seed(seed, "bench");
    bool dir_ready = false;
    try {
        cfg.validate();
        std::error_code ec;
        fs::create_directories(ctx.dir, ec);
        if (ec || !fs::is_directory(ctx.dir)) {
            fail(ErrorCode::Io, "cannot create output directory '" + dir + "'");
        }
        dir_ready = true;
        VirtualBench bench(ctx.bench);
        switch (cfg.mode) {
        case CampaignMode::GD:
            (void)run_gd_stage(ctx, bench, res);
            break;
        case CampaignMode::BO:
            run_bo_stage(ctx, bench, nullptr, res);
            break;
        case CampaignMode::GDThenBO: {
            const OptimizationTrace gd = run_gd_stage(ctx, bench, res);
            run_bo_stage(ctx, bench, &gd, res);
            break;
        }
        case CampaignMode::Landscape: {
            const OptimizationTrace gd = run_gd_stage(ctx, bench, res);
            run_landscape_stage(ctx, gd, res);
            break;
        }
        }
        res.ok = true;
    } catch (const Error &e) {
        res.error_code = e.code();
        res.error = e.what();
    } catch (const std::exception &e) {
        res.error_code = ErrorCode::Internal;
        res.error = e.what();
    }
    if (dir_ready) {
        try {
            const fs::path path = ctx.dir / "manifest.json";
            std::ofstream out = open_output(path);
            out << manifest_json(ctx, res).dump(2) << '\n';
            check_stream(out, path);
        } catch (const std::exception &e) {
            if (res.ok) {
                res.ok = false;
                res.error_code = ErrorCode::Io;
                res.error = e.what();
            }
        }
    }
    return res;
}

std::vector<RunResult> run_campaign(const CampaignConfig &cfg, int parallel) {
    cfg.validate();
    require(parallel >= 1, "parallel must be at least 1", ErrorCode::Config);
    const std::size_t n = cfg.seeds.size();
    std::vector<RunResult> results(n);
    auto dir_for = [&](std::size_t i) {
        if (n == 1) {
            return cfg.out_dir;
        }
        return (fs::path(cfg.out_dir) / ("seed_" + std::to_string(cfg.seeds[i]))).string();
    };
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            results[i] = run_single(cfg, cfg.seeds[i], dir_for(i));
        }
    };
    const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(parallel), n);
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
        for (auto &t : pool) {
            t.join();
        }
    }
    return results;
}

} // namespace cvsense
