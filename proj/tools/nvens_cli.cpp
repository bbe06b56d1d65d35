// nvens: field map -> sensitivity map -> optimal subset -> hologram -> validation.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>

#include "nvens/config.hpp"
#include "nvens/error.hpp"
#include "nvens/pipeline.hpp"

namespace {

struct Overrides {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string protocol;
  std::string import;
  std::string db;
};

void add_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON run configuration (all keys required)");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--seed", o.seed, "top-level RNG seed");
  cmd->add_option("--protocol", o.protocol, "ramsey|echo|cw")->check(CLI::IsMember({"ramsey", "echo", "cw"}));
  cmd->add_option("--import", o.import, "external Rabi-frequency map (CSV grid) instead of the analytic model");
  cmd->add_option("--db-convention", o.db, "10log|20log")->check(CLI::IsMember({"10log", "20log"}));
}

nvens::RunConfig resolve(const Overrides& o) {
  nvens::RunConfig cfg = o.config.empty() ? nvens::RunConfig{} : nvens::load_config(o.config);
  if (!o.out.empty()) cfg.output_dir = o.out;
  if (o.seed) cfg.seed = *o.seed;
  if (!o.protocol.empty()) cfg.protocol.protocol = nvens::protocols::parse_protocol(o.protocol);
  if (!o.import.empty()) cfg.field_import = o.import;
  if (!o.db.empty()) cfg.db = nvens::ensemble::parse_db_convention(o.db);
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal sensor subsets for inhomogeneously driven NV ensembles"};
  app.require_subcommand(1);
  Overrides o;
  auto* fieldmap = app.add_subcommand("fieldmap", "Rabi-frequency map and uniformity contours");
  auto* optimize = app.add_subcommand("optimize", "sensitivity map, optimal subset, metrology gains");
  auto* hologram = app.add_subcommand("hologram", "MRAF hologram and camera feedback for the subset");
  auto* validate = app.add_subcommand("validate", "Monte Carlo check of the ensemble law, illumination penalty");
  auto* run_all = app.add_subcommand("run-all", "all stages in order");
  auto* dump = app.add_subcommand("dump-config", "print the effective configuration as JSON");
  for (auto* c : {fieldmap, optimize, hologram, validate, run_all, dump}) add_flags(c, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    const nvens::RunConfig cfg = resolve(o);
    namespace p = nvens::pipeline;
    if (*fieldmap) {
      const auto s = p::cmd_fieldmap(cfg);
      std::printf("omega_map: %dx%d, centre %.6g\n", s.omega.grid().nx, s.omega.grid().ny, s.omega.center());
    } else if (*optimize) {
      const auto s = p::cmd_optimize(cfg);
      std::printf("%s: N* = %zu of %zu, eta_th/eta_min = %.4f, eta_th/eta_center = %.4f\n", s.report.protocol.c_str(),
                  s.report.n_star, s.report.n_total, s.report.eta_th / s.report.eta_min,
                  s.report.eta_th / s.report.eta_center);
      for (const auto& r : s.report.rows)
        std::printf("  baseline %5.1f%%: gain %.2f dB\n", 100.0 * r.uniformity_target, r.gain_db);
    } else if (*hologram) {
      const auto s = p::cmd_hologram(cfg);
      std::printf("MRAF non-uniformity %.4f, efficiency %.4f; after feedback %.4f\n",
                  s.hologram.synthesis.final_metrics.nonuniformity, s.hologram.synthesis.final_metrics.efficiency,
                  s.hologram.feedback.log.empty() ? s.hologram.feedback.initial.nonuniformity
                                                  : s.hologram.feedback.log.back().nonuniformity);
    } else if (*validate) {
      const auto v = p::cmd_validate(cfg);
      std::printf("MC std / ensemble law: subset %.4f, full %.4f; penalty %.3f dB\n", v.mc.subset.std / v.law_subset,
                  v.mc.full.std / v.law_full, v.synthetic_penalty.loss_db);
    } else if (*run_all) {
      p::cmd_run_all(cfg);
      std::printf("outputs written to %s\n", cfg.output_dir.string().c_str());
    } else if (*dump) {
      std::cout << nvens::dump_config(cfg);
    }
  } catch (const nvens::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const nvens::ParseError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
