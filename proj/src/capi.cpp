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
#include "cvsense/cvsense.h"

#include <cstring>
#include <exception>
#include <new>
#include <string>
#include <vector>

#include "cvsense/campaign.hpp"
#include "cvsense/error.hpp"
#include "cvsense/estimation.hpp"
#include "cvsense/trace_io.hpp"
#include "cvsense/virtual_bench.hpp"

struct cvs_campaign {
    cvsense::CampaignConfig config;
    std::vector<cvsense::RunResult> results;
};

struct cvs_trace {
    cvsense::TraceFile file;
    cvsense::TraceSummary summary;
};

struct cvs_bench {
    explicit cvs_bench(const cvsense::BenchConfig &cfg) : bench(cfg) {}
    cvsense::VirtualBench bench;
};

namespace {

thread_local std::string last_error;

cvs_status to_status(cvsense::ErrorCode code) {
    return static_cast<cvs_status>(static_cast<int>(code));
}

cvs_status set_error(cvs_status status, const std::string &message) {
    last_error = message;
    return status;
}

// Runs `body` and turns exceptions into status codes.
template <typename F>
cvs_status guarded(F &&body) {
    try {
        body();
        return CVS_OK;
    } catch (const cvsense::Error &e) {
        return set_error(to_status(e.code()), e.what());
    } catch (const std::bad_alloc &) {
        return set_error(CVS_ERR_INTERNAL, "out of memory");
    } catch (const std::exception &e) {
        return set_error(CVS_ERR_INTERNAL, e.what());
    } catch (...) {
        return set_error(CVS_ERR_INTERNAL, "unknown error");
    }
}

cvs_status null_argument(const char *name) {
    return set_error(CVS_ERR_INVALID_ARGUMENT, std::string(name) + " must not be NULL");
}

cvsense::BenchConfig bench_config(const cvs_bench_params &p) {
    cvsense::BenchConfig cfg;
    cfg.r = p.r;
    cfg.alpha = p.alpha;
    cfg.eta = p.eta;
    cfg.n_bar = p.n_bar;
    cfg.phase_noise_rms = p.phase_noise_rms;
    cfg.samples_per_measurement = p.samples_per_measurement;
    cfg.rng_seed = p.seed;
    cfg.validate();
    return cfg;
}

} // namespace

extern "C" {

const char *cvs_version(void) { return cvsense::kVersion; }

const char *cvs_last_error(void) { return last_error.c_str(); }

const char *cvs_status_name(cvs_status status) {
    switch (status) {
    case CVS_OK:
        return "ok";
    case CVS_ERR_INVALID_ARGUMENT:
        return "invalid argument";
    case CVS_ERR_NUMERICAL:
        return "numerical error";
    case CVS_ERR_CONFIG:
        return "config error";
    case CVS_ERR_IO:
        return "i/o error";
    case CVS_ERR_FORMAT:
        return "format error";
    case CVS_ERR_OPTIMIZER:
        return "optimizer error";
    case CVS_ERR_INTERNAL:
        return "internal error";
    }
    return "unknown status";
}

cvs_status cvs_campaign_load(const char *path, cvs_campaign **out) {
    if (path == nullptr) {
        return null_argument("path");
    }
    if (out == nullptr) {
        return null_argument("out");
    }
    *out = nullptr;
    return guarded([&] { *out = new cvs_campaign{cvsense::load_campaign(path), {}}; });
}

cvs_status cvs_campaign_parse(const char *json_text, cvs_campaign **out) {
    if (json_text == nullptr) {
        return null_argument("json_text");
    }
    if (out == nullptr) {
        return null_argument("out");
    }
    *out = nullptr;
    return guarded([&] { *out = new cvs_campaign{cvsense::parse_campaign(json_text), {}}; });
}

cvs_status cvs_campaign_set_seeds(cvs_campaign *campaign, const uint64_t *seeds, size_t count) {
    if (campaign == nullptr) {
        return null_argument("campaign");
    }
    if (seeds == nullptr || count == 0) {
        return set_error(CVS_ERR_INVALID_ARGUMENT, "at least one seed is required");
    }
    return guarded([&] {
        cvsense::CampaignConfig next = campaign->config;
        next.seeds.assign(seeds, seeds + count);
        next.validate();
        campaign->config = std::move(next);
    });
}

cvs_status cvs_campaign_set_out_dir(cvs_campaign *campaign, const char *dir) {
    if (campaign == nullptr) {
        return null_argument("campaign");
    }
    if (dir == nullptr || *dir == '\0') {
        return set_error(CVS_ERR_INVALID_ARGUMENT, "output directory must be a non-empty string");
    }
    return guarded([&] { campaign->config.out_dir = dir; });
}

cvs_status cvs_campaign_set_mode(cvs_campaign *campaign, const char *mode) {
    if (campaign == nullptr) {
        return null_argument("campaign");
    }
    if (mode == nullptr) {
        return null_argument("mode");
    }
    return guarded([&] {
        const std::string m = mode;
        for (auto candidate : {cvsense::CampaignMode::GD, cvsense::CampaignMode::BO, cvsense::CampaignMode::GDThenBO,
                               cvsense::CampaignMode::Landscape}) {
            if (cvsense::to_string(candidate) == m) {
                campaign->config.mode = candidate;
                return;
            }
        }
        cvsense::fail(cvsense::ErrorCode::Config, "unknown mode '" + m + "'");
    });
}

cvs_status cvs_campaign_run(cvs_campaign *campaign, int parallel) {
    if (campaign == nullptr) {
        return null_argument("campaign");
    }
    cvs_status status = guarded([&] { campaign->results = cvsense::run_campaign(campaign->config, parallel); });
    if (status != CVS_OK) {
        return status;
    }
    for (const auto &r : campaign->results) {
        if (!r.ok) {
            return set_error(to_status(r.error_code), "seed " + std::to_string(r.seed) + ": " + r.error);
        }
    }
    return CVS_OK;
}

size_t cvs_campaign_run_count(const cvs_campaign *campaign) {
    return campaign == nullptr ? 0 : campaign->results.size();
}

cvs_status cvs_campaign_run_result(const cvs_campaign *campaign, size_t index, uint64_t *seed, cvs_status *status,
                                   const char **dir, const char **message) {
    if (campaign == nullptr) {
        return null_argument("campaign");
    }
    if (index >= campaign->results.size()) {
        return set_error(CVS_ERR_INVALID_ARGUMENT, "run index out of range");
    }
    const cvsense::RunResult &r = campaign->results[index];
    if (seed != nullptr) {
        *seed = r.seed;
    }
    if (status != nullptr) {
        *status = r.ok ? CVS_OK : to_status(r.error_code);
    }
    if (dir != nullptr) {
        *dir = r.dir.c_str();
    }
    if (message != nullptr) {
        *message = r.error.c_str();
    }
    return CVS_OK;
}

void cvs_campaign_free(cvs_campaign *campaign) { delete campaign; }

cvs_status cvs_trace_load(const char *path, cvs_trace **out) {
    if (path == nullptr) {
        return null_argument("path");
    }
    if (out == nullptr) {
        return null_argument("out");
    }
    *out = nullptr;
    return guarded([&] {
        cvsense::TraceFile file = cvsense::read_trace_file(path);
        cvsense::TraceSummary summary = cvsense::summarize(file);
        *out = new cvs_trace{std::move(file), std::move(summary)};
    });
}

cvs_status cvs_trace_summary(const cvs_trace *trace, cvs_summary *out) {
    if (trace == nullptr) {
        return null_argument("trace");
    }
    if (out == nullptr) {
        return null_argument("out");
    }
    const cvsense::TraceSummary &s = trace->summary;
    out->epochs = s.epochs;
    out->best_cost = s.best_cost;
    out->best_epoch = s.best_epoch;
    out->final_phi_hd = s.final_settings.phi_hd;
    out->final_phi_alpha = s.final_settings.phi_alpha;
    out->total_measurements = s.total_measurements;
    out->shot_noise_limit = s.shot_noise_limit;
    out->below_shot_noise_limit = s.below_shot_noise_limit ? 1 : 0;
    out->kicks = static_cast<int>(s.kicks.size());
    out->kicks_recovered = 0;
    for (const auto &k : s.kicks) {
        out->kicks_recovered += k.recovered() ? 1 : 0;
    }
    return CVS_OK;
}

cvs_status cvs_trace_report(const cvs_trace *trace, char *buffer, size_t capacity, size_t *needed) {
    if (trace == nullptr) {
        return null_argument("trace");
    }
    return guarded([&] {
        const std::string text = cvsense::format_summary(trace->summary);
        if (needed != nullptr) {
            *needed = text.size() + 1;
        }
        if (buffer != nullptr && capacity > 0) {
            if (capacity < text.size() + 1) {
                cvsense::fail(cvsense::ErrorCode::InvalidArgument, "report buffer too small");
            }
            std::memcpy(buffer, text.c_str(), text.size() + 1);
        }
    });
}

void cvs_trace_free(cvs_trace *trace) { delete trace; }

void cvs_bench_default_params(cvs_bench_params *params) {
    if (params == nullptr) {
        return;
    }
    const cvsense::BenchConfig d;
    params->r = d.r;
    params->alpha = d.alpha;
    params->eta = d.eta;
    params->n_bar = d.n_bar;
    params->phase_noise_rms = d.phase_noise_rms;
    params->samples_per_measurement = d.samples_per_measurement;
    params->seed = d.rng_seed;
}

cvs_status cvs_bench_create(const cvs_bench_params *params, cvs_bench **out) {
    if (params == nullptr) {
        return null_argument("params");
    }
    if (out == nullptr) {
        return null_argument("out");
    }
    *out = nullptr;
    return guarded([&] { *out = new cvs_bench(bench_config(*params)); });
}

cvs_status cvs_bench_measure(cvs_bench *bench, double phi_hd, double phi_alpha, double *mean, double *variance) {
    if (bench == nullptr) {
        return null_argument("bench");
    }
    return guarded([&] {
        const cvsense::MeasurementRecord rec = bench->bench.measure(phi_hd, phi_alpha);
        if (mean != nullptr) {
            *mean = rec.sample_mean;
        }
        if (variance != nullptr) {
            *variance = rec.sample_var;
        }
    });
}

cvs_status cvs_bench_estimate_cost(cvs_bench *bench, double phi_hd, double phi_alpha, double *cost) {
    if (bench == nullptr) {
        return null_argument("bench");
    }
    if (cost == nullptr) {
        return null_argument("cost");
    }
    return guarded([&] { *cost = cvsense::estimate_cost(bench->bench, phi_hd, phi_alpha).cost; });
}

void cvs_bench_free(cvs_bench *bench) { delete bench; }

cvs_status cvs_true_cost(const cvs_bench_params *params, double phi_hd, double phi_alpha, double *cost) {
    if (params == nullptr) {
        return null_argument("params");
    }
    if (cost == nullptr) {
        return null_argument("cost");
    }
    return guarded([&] { *cost = cvsense::true_cost(bench_config(*params), phi_hd, phi_alpha); });
}

cvs_status cvs_shot_noise_limit(const cvs_bench_params *params, double *cost) {
    if (params == nullptr) {
        return null_argument("params");
    }
    if (cost == nullptr) {
        return null_argument("cost");
    }
    return guarded([&] { *cost = cvsense::shot_noise_limit(bench_config(*params)); });
}

} // extern "C"
