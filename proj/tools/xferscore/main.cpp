#include <iostream>

#include <CLI11.hpp>

#include "app.hpp"

int main(int argc, char** argv) {
  using namespace xfer::app;
  CLI::App cli{"xferscore: rank pre-trained speech models or layers by transferability without fine-tuning"};
  cli.require_subcommand(1);

  RunConfig cfg;
  std::string method = "logme";
  auto* score = cli.add_subcommand("score", "Score every manifest candidate with one method");
  score->add_option("--manifest", cfg.manifest, "Experiment manifest (JSON)")->required()->check(CLI::ExistingFile);
  score->add_option("--method", method, "logme | swd | tsne")->check(CLI::IsMember({"logme", "swd", "tsne"}));
  score->add_option("--output", cfg.output, "Score JSON output (stdout when omitted)");
  score->add_option("--seed", cfg.seed, "RNG seed for stochastic methods");
  score->add_option("--jobs", cfg.jobs, "Candidates scored concurrently")->check(CLI::PositiveNumber);
  score->add_option("--projections", cfg.projections, "SWD random projections")->check(CLI::PositiveNumber);
  score->add_option("--batch-size", cfg.batch_size, "SWD samples per side and timestep")->check(CLI::PositiveNumber);
  score->add_option("--perplexity", cfg.perplexity, "t-SNE perplexity (default min(30, (n-1)/3))");
  score->add_flag("--pool-mean", cfg.pool_mean, "Average frames into one vector per utterance");
  score->add_option("--dump-embedding", cfg.dump_embedding, "Write the t-SNE embedding to this .npy");
  score->add_option("--max-points", cfg.max_points, "t-SNE points kept per domain")->check(CLI::PositiveNumber);

  std::filesystem::path align_manifest, align_output;
  std::optional<std::string> align_candidate;
  auto* align = cli.add_subcommand("align", "Forced-align one candidate's utterances, write JSONL");
  align->add_option("--manifest", align_manifest, "Experiment manifest (JSON)")->required()->check(CLI::ExistingFile);
  align->add_option("--candidate", align_candidate, "Candidate id (optional for single-candidate manifests)");
  align->add_option("--output", align_output, "Alignment JSONL output")->required();

  std::vector<std::filesystem::path> score_files;
  std::optional<std::filesystem::path> truth, rank_manifest, table;
  std::filesystem::path report;
  std::string direction = "lower_better";
  auto* rank = cli.add_subcommand("rank", "Correlate score rankings with fine-tuning ground truth");
  rank->add_option("--scores", score_files, "Score JSON files")->required()->check(CLI::ExistingFile);
  auto* gt_opt = rank->add_option("--ground-truth", truth, "JSON object {candidate_id: metric}");
  auto* mf_opt = rank->add_option("--manifest", rank_manifest, "Take ground truth from manifest candidates");
  gt_opt->excludes(mf_opt);
  rank->add_option("--metric-direction", direction, "lower_better | higher_better")
      ->check(CLI::IsMember({"lower_better", "higher_better"}));
  rank->add_option("--output", report, "Report JSON output");
  rank->add_option("--table", table, "Write the text table here instead of stdout");

  auto* selftest = cli.add_subcommand("selftest", "Run the embedded fixture suite");

  CLI11_PARSE(cli, argc, argv);

  try {
    if (*score) {
      cfg.method = parse_method(method);
      return cmd_score(cfg, std::cout, std::cerr);
    }
    if (*align) return cmd_align(align_manifest, align_candidate, align_output, std::cerr);
    if (*rank) {
      return cmd_rank(score_files, truth, rank_manifest, xfer::parse_metric_direction(direction), report, table,
                      std::cout, std::cerr);
    }
    if (*selftest) return cmd_selftest(std::cout);
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  return 0;
}
