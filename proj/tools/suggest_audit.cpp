#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "audit/pipeline.hpp"

using audit::pipeline::RunConfig;

int main(int argc, char** argv) {
    CLI::App app{"suggest-audit: recursive autocomplete interrogation and topical bias analysis"};
    app.require_subcommand(1);
    app.fallthrough();  // accept global options after the subcommand too

    std::string config_path;
    bool resume = false;
    std::string mode_override, fixture_out = "fixture.json";
    double alpha_override = -1.0;
    long long seed_override = -1;

    app.add_option("--config", config_path, "run configuration file (JSON)")->required();
    app.add_flag("--resume", resume, "resume from checkpoints / existing outputs");
    app.add_option("--mode", mode_override, "regression mode: univariate|multivariate");
    app.add_option("--alpha", alpha_override, "significance level override");
    app.add_option("--seed", seed_override, "seed override");

    auto* crawl = app.add_subcommand("crawl", "build suggestion trees for every root term");
    auto* prune = app.add_subcommand("prune", "prune sub-trees disconnected from their root term");
    auto* preprocess = app.add_subcommand("preprocess", "strip roots, remove stopwords, build corpus");
    auto* vectorize = app.add_subcommand("vectorize", "mean-pool word vectors per suggestion");
    auto* cluster = app.add_subcommand("cluster", "k-means clustering with k selection");
    auto* analyze = app.add_subcommand("analyze", "dummy-variable regression over cluster shares");
    auto* report = app.add_subcommand("report", "emit CSV/JSON/text report tables");
    auto* run = app.add_subcommand("run", "run all stages in order");
    auto* record = app.add_subcommand("record-fixture", "record live responses into a replay fixture");
    record->add_option("--out", fixture_out, "fixture output path");

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig config = RunConfig::load(config_path);
        if (!mode_override.empty()) {
            if (mode_override != "univariate" && mode_override != "multivariate")
                throw std::runtime_error("--mode must be univariate or multivariate");
            config.mode = mode_override == "multivariate"
                              ? audit::regression::AuditMode::multivariate
                              : audit::regression::AuditMode::univariate;
        }
        if (alpha_override >= 0.0) config.alpha = alpha_override;
        if (seed_override >= 0) {
            config.seed = static_cast<uint64_t>(seed_override);
            config.seed_set = true;
        }

        audit::pipeline::DirLock lock(config.output_dir);
        if (crawl->parsed()) audit::pipeline::cmd_crawl(config, resume);
        else if (prune->parsed()) audit::pipeline::cmd_prune(config);
        else if (preprocess->parsed()) audit::pipeline::cmd_preprocess(config);
        else if (vectorize->parsed()) audit::pipeline::cmd_vectorize(config);
        else if (cluster->parsed()) audit::pipeline::cmd_cluster(config);
        else if (analyze->parsed()) audit::pipeline::cmd_analyze(config);
        else if (report->parsed()) audit::pipeline::cmd_report(config);
        else if (run->parsed()) audit::pipeline::cmd_run(config, resume);
        else if (record->parsed()) audit::pipeline::cmd_record_fixture(config, fixture_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
