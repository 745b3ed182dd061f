#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "kinex/coefficients.hpp"
#include "kinex/errors.hpp"
#include "kinex/experiment.hpp"
#include "kinex/transport.hpp"

namespace {

enum Exit { ok = 0, io_failure = 1, invalid = 2, strict_failure = 3 };

int run(const std::string& path, bool strict) {
  const auto spec = kinex::load_spec(path);
  const auto report = kinex::run_experiment(spec);
  kinex::write_artifacts(spec, report);
  if (spec.output.summary.empty()) std::cout << report.summary.dump(2) << '\n';
  for (const auto& c : report.checks) {
    std::cerr << (c.passed ? "pass " : "FAIL ") << c.name << (c.strict ? "" : " (reported)") << '\n';
  }
  return strict && report.strict_failure() ? strict_failure : ok;
}

int diag(const std::string& path, int n, double p) {
  std::ifstream in(path);
  if (!in) throw kinex::IoError("cannot open '" + path + "'");
  kinex::Json j;
  try {
    j = kinex::Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw kinex::InvalidConfig(e.what());
  }
  const kinex::Json& model = j.contains("model") ? j.at("model") : j;
  if (n <= 0) n = j.value("n", 2);
  if (p <= 0.0) p = j.value("p", 2.0);
  if (n < 2) throw kinex::InvalidConfig("N must be at least 2");
  if (!(p > 0.0)) throw kinex::InvalidConfig("p must be positive");
  const auto built = kinex::model_spec_from_json(model).build();
  std::cout << kinex::to_json(kinex::diagnostics(built, n, p)).dump(2) << '\n';
  return ok;
}

int w2(const std::string& a, const std::string& b) {
  const kinex::EmpiricalMeasured ma(kinex::read_values(a));
  const kinex::EmpiricalMeasured mb(kinex::read_values(b));
  std::cout << kinex::format_real(kinex::w2_squared(ma, mb)) << '\n';
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kinex: Monte Carlo laboratory for wealth-exchange particle systems"};
  app.require_subcommand(1);

  std::string spec_path;
  bool strict = false;
  auto* run_cmd = app.add_subcommand("run", "run an experiment spec");
  run_cmd->add_option("spec", spec_path, "experiment JSON")->required();
  run_cmd->add_flag("--strict", strict, "exit 3 when a strict check fails");

  std::string model_path;
  int n = 0;
  double p = 0.0;
  auto* diag_cmd = app.add_subcommand("diag", "print model diagnostics");
  diag_cmd->add_option("model", model_path, "model JSON")->required();
  diag_cmd->add_option("-n,--particles", n, "number of particles N");
  diag_cmd->add_option("-p,--power", p, "moment order p");

  std::string a_path, b_path;
  auto* w2_cmd = app.add_subcommand("w2", "squared 2-Wasserstein distance of two samples");
  w2_cmd->add_option("a", a_path, "first sample")->required();
  w2_cmd->add_option("b", b_path, "second sample")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : invalid;
  }

  try {
    if (*run_cmd) return run(spec_path, strict);
    if (*diag_cmd) return diag(model_path, n, p);
    if (*w2_cmd) return w2(a_path, b_path);
  } catch (const kinex::IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return io_failure;
  } catch (const kinex::Error& e) {
    std::cerr << "invalid: " << e.what() << '\n';
    return invalid;
  }
  return ok;
}
