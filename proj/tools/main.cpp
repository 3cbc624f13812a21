#include "semfuzz/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"semfuzz: semantics-driven compiler fuzzing"};
    app.require_subcommand(1);

    semfuzz::ExtractArgs extract{};
    CLI::App* sub_extract =
        app.add_subcommand("extract", "Extract features from bug artifacts");
    sub_extract->add_option("--config", extract.config_path, "Campaign config file");
    sub_extract->add_option("--fixtures", extract.fixtures_dir,
                            "Directory of on-disk bug artifacts");
    sub_extract->add_option("--tracker", extract.tracker_url,
                            "Bug tracker base URL (REST)");
    sub_extract->add_option("--query", extract.query, "Bug filter query");
    sub_extract->add_option("--limit", extract.limit, "Maximum bugs to fetch");
    sub_extract->add_option("--out-pool", extract.out_pool, "Feature pool output path")
        ->required();
    sub_extract->add_option("--out-groups", extract.out_groups,
                            "Per-bug feature group output path (JSONL)");

    semfuzz::TraindataArgs traindata{};
    CLI::App* sub_traindata = app.add_subcommand(
        "traindata", "Derive completion-model training pairs from feature groups");
    sub_traindata->add_option("--groups", traindata.groups_path, "Input groups (JSONL)")
        ->required();
    sub_traindata->add_option("--out", traindata.out_path, "Output dataset (JSONL)")
        ->required();
    sub_traindata->add_option("--seed", traindata.seed, "RNG seed for splits");

    semfuzz::FuzzArgs fuzz{};
    CLI::App* sub_fuzz = app.add_subcommand("fuzz", "Run a fuzzing campaign");
    sub_fuzz->add_option("--config", fuzz.config_path, "Campaign config file")
        ->required();
    sub_fuzz->add_flag("--resume", fuzz.resume,
                       "Resume from the campaign directory snapshot");
    sub_fuzz->add_flag("--explain-config", fuzz.explain_config,
                       "Print the effective configuration and exit");

    semfuzz::TriageArgs triage{};
    CLI::App* sub_triage =
        app.add_subcommand("triage", "Summarize deduplicated crashes in a campaign");
    sub_triage->add_option("campaign_dir", triage.campaign_dir, "Campaign directory")
        ->required();

    semfuzz::MetricsArgs metrics{};
    CLI::App* sub_metrics = app.add_subcommand(
        "metrics", "Score group coherence or compare coverage sets");
    sub_metrics->add_option("--groups", metrics.groups_path, "Groups to score (JSONL)");
    sub_metrics->add_option("--out", metrics.out_path, "Score output path (JSONL)");
    sub_metrics->add_option("--tau", metrics.tau, "Redundancy similarity cutoff");
    sub_metrics->add_option("--hash-dim", metrics.hash_dim,
                            "Hashed-embedding dimensionality");
    sub_metrics->add_flag("--use-endpoint", metrics.use_endpoint,
                          "Embed via the configured endpoint instead of hashing");
    sub_metrics->add_option("--config", metrics.config_path, "Campaign config file");
    sub_metrics->add_option("--jaccard-a", metrics.jaccard_a, "First coverage set");
    sub_metrics->add_option("--jaccard-b", metrics.jaccard_b, "Second coverage set");
    sub_metrics->add_option("--unit", metrics.unit, "Coverage unit: edge or line");

    CLI11_PARSE(app, argc, argv);

    if (sub_extract->parsed()) return semfuzz::cmd_extract(extract, std::cout, std::cerr);
    if (sub_traindata->parsed())
        return semfuzz::cmd_traindata(traindata, std::cout, std::cerr);
    if (sub_fuzz->parsed()) return semfuzz::cmd_fuzz(fuzz, std::cout, std::cerr);
    if (sub_triage->parsed()) return semfuzz::cmd_triage(triage, std::cout, std::cerr);
    if (sub_metrics->parsed()) return semfuzz::cmd_metrics(metrics, std::cout, std::cerr);
    return 1;
}
