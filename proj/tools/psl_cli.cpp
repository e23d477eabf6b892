// Command line front end: runs one experiment per subcommand and reports its audit.
// Exit codes: 0 all checks pass, 2 an audit check failed, 1 usage or runtime error.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "psl/experiments.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitError = 1;
constexpr int kExitAudit = 2;

struct Flags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string resume;
};

void add_flags(CLI::App* sub, Flags& f, bool run_flags) {
  if (run_flags) {
    sub->add_option("--config", f.config, "JSON scenario file (defaults apply when omitted)")
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", f.seed, "override the configured seed");
    sub->add_option("--threads", f.threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--resume", f.resume, "checkpoint stem to continue from (2D runs)");
  }
  sub->add_option("--out", f.out, "output directory");
}

void print_outcome(const psl::Outcome& o, const std::filesystem::path& dir) {
  for (const auto& c : o.checks)
    std::printf("%s  %-34s %s\n", c.pass ? "pass" : "FAIL", c.name.c_str(), c.detail.c_str());
  for (const auto& n : o.notes) std::printf("note  %s\n", n.c_str());
  std::printf("%s: %s (artifacts in %s)\n", o.kind.c_str(), o.pass() ? "all checks passed" : "audit failed",
              dir.string().c_str());
}

int run(const std::string& kind, const Flags& f) {
  const std::string text = f.config.empty() ? "{}" : psl::read_text(f.config);
  auto cfg = psl::parse_config(text, kind);
  if (f.seed) cfg.seed = *f.seed;
  if (f.threads) cfg.threads = *f.threads;
  if (!f.out.empty()) cfg.output_dir = f.out;
  psl::validate_config(cfg);
  psl::RunControl ctl;
  if (!f.resume.empty()) ctl.resume = std::filesystem::path(f.resume);
  const std::filesystem::path dir(cfg.output_dir);
  const auto o = psl::run_experiment(cfg, dir, ctl);
  print_outcome(o, dir);
  return o.pass() ? kExitPass : kExitAudit;
}

int report(const Flags& f) {
  if (f.out.empty()) throw psl::InvalidArgument("report: --out must name an existing output directory");
  const std::filesystem::path dir(f.out);
  const auto o = psl::render_report(dir);
  print_outcome(o, dir);
  return o.pass() ? kExitPass : kExitAudit;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Boundary-layer stability experiments and audits"};
  app.require_subcommand(1);
  const std::map<std::string, std::string> commands = {
      {"simulate2d", "sim2d"},
      {"simulate3d-linear", "sim3d-linear"},
      {"heat-decay", "heat-decay"},
      {"verify-inequalities", "verify-inequalities"},
      {"lemma-audit", "lemma-audit"},
      {"smoothing-ladder", "smoothing-ladder"},
  };
  const std::map<std::string, std::string> help = {
      {"simulate2d", "2D nonlinear run with the energy budget audit"},
      {"simulate3d-linear", "3D linearized run with the analytic-norm monitor"},
      {"heat-decay", "decay exponents of the vertical heat flow"},
      {"verify-inequalities", "combinatorial weight inequality scans"},
      {"lemma-audit", "weighted inequalities on random profile families"},
      {"smoothing-ladder", "space-time derivative ladder and tangential radius"},
  };
  Flags flags;
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, kind] : commands) {
    subs[name] = app.add_subcommand(name, help.at(name));
    add_flags(subs[name], flags, true);
  }
  auto* rep = app.add_subcommand("report", "re-render plots and print the stored audit of an output directory");
  add_flags(rep, flags, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitError;
  }

  try {
    if (rep->parsed()) return report(flags);
    for (const auto& [name, kind] : commands)
      if (subs[name]->parsed()) return run(kind, flags);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitError;
  }
  return kExitError;
}
