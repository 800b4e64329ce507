#include <CLI11.hpp>
#include <iostream>
#include <optional>

#include "qrmap/config.hpp"
#include "qrmap/errors.hpp"
#include "qrmap/pipeline.hpp"

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> taus;
  std::optional<std::size_t> bootstrap_b;
  std::optional<int> workers;
  std::optional<std::string> out;
};

void add_common(CLI::App* sub, Overrides& o) {
  sub->add_option("--config", o.config, "Run configuration file")->required();
  sub->add_option("--seed", o.seed, "Master seed for bootstrap resampling");
  sub->add_option("--taus", o.taus, "Comma-separated tau levels or 'default'");
  sub->add_option("--bootstrap-b", o.bootstrap_b, "Bootstrap replicates");
  sub->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--out", o.out, "Output directory");
}

qrmap::RunConfig resolve(const Overrides& o) {
  auto cfg = qrmap::load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.taus) cfg.taus = qrmap::parse_tau_list(*o.taus);
  if (o.bootstrap_b) cfg.bootstrap_b = *o.bootstrap_b;
  if (o.workers) cfg.workers = *o.workers;
  if (o.out) cfg.out_dir = *o.out;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace qrmap::pipeline;
  CLI::App app{"Quantile regression mapping: fit, validate, bootstrap, predict and compare"};
  app.set_version_flag("--version", std::string(QRMAP_VERSION));
  app.require_subcommand(1);

  Overrides o;
  struct Command {
    const char* name;
    const char* help;
    CommandResult (*run)(const qrmap::RunConfig&);
  };
  const Command commands[] = {
      {"fit", "Preprocess covariates and fit the quantile profile", run_fit},
      {"cv", "Leave-one-out cross-validation", run_cv},
      {"bootstrap", "Bootstrap coefficient distributions", run_bootstrap},
      {"predict", "Prediction and IQR maps", run_predict},
      {"compare", "Compare the reference map against benchmark maps", run_compare},
  };
  std::vector<std::pair<CLI::App*, const Command*>> subs;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    add_common(sub, o);
    subs.emplace_back(sub, &c);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfigError;
  }

  for (const auto& [sub, cmd] : subs) {
    if (!sub->parsed()) continue;
    try {
      const auto result = cmd->run(resolve(o));
      for (const auto& w : result.warnings) std::cerr << "qrmap: warning: " << w << '\n';
      for (const auto& p : result.written) std::cout << p.string() << '\n';
      return result.exit_code;
    } catch (const std::exception& e) {
      std::cerr << "qrmap: error: " << e.what() << '\n';
      return exit_code_for(e);
    }
  }
  return kUnexpected;
}
