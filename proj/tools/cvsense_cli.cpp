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
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cvsense/cvsense.h"

namespace {

struct RunOptions {
    std::string config;
    std::vector<std::uint64_t> seeds;
    std::string out_dir;
    int parallel = 1;
};

void add_run_options(CLI::App *cmd, RunOptions &opts) {
    cmd->add_option("config", opts.config, "Campaign config (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--seed", opts.seeds, "Campaign seed(s); overrides the config")->delimiter(',');
    cmd->add_option("--out-dir", opts.out_dir, "Output directory; overrides the config");
    cmd->add_option("--parallel", opts.parallel, "Seeds run concurrently")->check(CLI::PositiveNumber);
}

int report_failure(cvs_status status, const char *what) {
    std::fprintf(stderr, "cvsense: %s: %s: %s\n", what, cvs_status_name(status), cvs_last_error());
    return static_cast<int>(status);
}

int run_campaign(const RunOptions &opts, const char *mode) {
    cvs_campaign *campaign = nullptr;
    cvs_status status = cvs_campaign_load(opts.config.c_str(), &campaign);
    if (status != CVS_OK) {
        return report_failure(status, "config");
    }
    if (!opts.seeds.empty()) {
        status = cvs_campaign_set_seeds(campaign, opts.seeds.data(), opts.seeds.size());
    }
    if (status == CVS_OK && !opts.out_dir.empty()) {
        status = cvs_campaign_set_out_dir(campaign, opts.out_dir.c_str());
    }
    if (status == CVS_OK && mode != nullptr) {
        status = cvs_campaign_set_mode(campaign, mode);
    }
    if (status != CVS_OK) {
        const int code = report_failure(status, "config");
        cvs_campaign_free(campaign);
        return code;
    }

    const cvs_status run_status = cvs_campaign_run(campaign, opts.parallel);
    const size_t runs = cvs_campaign_run_count(campaign);
    if (runs == 0 && run_status != CVS_OK) {
        const int code = report_failure(run_status, "run");
        cvs_campaign_free(campaign);
        return code;
    }
    for (size_t i = 0; i < runs; ++i) {
        std::uint64_t seed = 0;
        cvs_status s = CVS_OK;
        const char *dir = nullptr;
        const char *message = nullptr;
        (void)cvs_campaign_run_result(campaign, i, &seed, &s, &dir, &message);
        if (s == CVS_OK) {
            std::printf("seed %llu: ok -> %s\n", static_cast<unsigned long long>(seed), dir);
        } else {
            std::fprintf(stderr, "cvsense: seed %llu: %s: %s (partial output in %s)\n",
                         static_cast<unsigned long long>(seed), cvs_status_name(s), message, dir);
        }
    }
    cvs_campaign_free(campaign);
    return static_cast<int>(run_status);
}

int report_trace(const std::string &path) {
    cvs_trace *trace = nullptr;
    cvs_status status = cvs_trace_load(path.c_str(), &trace);
    if (status != CVS_OK) {
        return report_failure(status, "report");
    }
    size_t needed = 0;
    status = cvs_trace_report(trace, nullptr, 0, &needed);
    std::string text(needed, '\0');
    if (status == CVS_OK) {
        status = cvs_trace_report(trace, text.data(), text.size(), nullptr);
    }
    cvs_trace_free(trace);
    if (status != CVS_OK) {
        return report_failure(status, "report");
    }
    std::fputs(text.c_str(), stdout);
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Optimise a squeezed-light phase sensor on a simulated bench"};
    app.set_version_flag("--version", cvs_version());
    app.require_subcommand(1);

    RunOptions run_opts;
    CLI::App *run = app.add_subcommand("run", "Execute the campaign described by a config");
    add_run_options(run, run_opts);

    RunOptions landscape_opts;
    CLI::App *landscape = app.add_subcommand("landscape", "Write the true-cost landscape with a GD overlay");
    add_run_options(landscape, landscape_opts);

    std::string trace_path;
    CLI::App *report = app.add_subcommand("report", "Summarise a trace file");
    report->add_option("trace", trace_path, "Trace file (NDJSON)")->required();

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) {
        return run_campaign(run_opts, nullptr);
    }
    if (landscape->parsed()) {
        return run_campaign(landscape_opts, "landscape");
    }
    return report_trace(trace_path);
}
