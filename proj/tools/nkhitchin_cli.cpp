// nkhitchin: batch front end. Every command prints its JSON manifest on
// stdout. Exit codes: 0 success, 1 numeric or reproduction failure, 2 usage.

#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nkhitchin/commands.hpp"

namespace {

using nkh::cmd::Outcome;

nkh::HalfFamily make_family(const std::string& name, double param) {
  return name == "a" ? nkh::HalfFamily::a(param) : nkh::HalfFamily::b(param);
}

int emit(const Outcome& o, const std::string& manifest_path) {
  const std::string text = o.manifest.dump() + "\n";
  if (!manifest_path.empty()) nkh::write_text(manifest_path, text);
  std::cout << text;
  return o.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nearly Kaehler halves and the Hitchin index on S3xS3"};
  app.require_subcommand(1);
  std::string manifest_path;

  // verify-oracles
  auto* verify = app.add_subcommand("verify-oracles", "closed-form and Taylor consistency checks");
  nkh::cmd::VerifyOptions vopt;
  verify->add_option("--corrupt-lambda", vopt.corrupt_lambda, "test hook: scale lambda on the oracle curves")
      ->check(CLI::PositiveNumber);
  verify->add_option("--manifest", manifest_path, "also write the manifest here");

  // half
  auto* half = app.add_subcommand("half", "integrate one half to its maximal-volume orbit");
  std::string family = "b";
  double param = 1.0;
  double eps = 1e-2, tol = 1e-10;
  std::string out_path;
  half->add_option("--family", family, "a (singular orbit S2) or b (singular orbit S3)")
      ->check(CLI::IsMember({"a", "b"}));
  half->add_option("--param", param, "family parameter")->required()->check(CLI::PositiveNumber);
  half->add_option("--eps", eps, "launch time")->check(CLI::Range(1e-12, 0.1));
  half->add_option("--tol", tol, "integrator tolerance")->check(CLI::Range(1e-14, 1e-3));
  half->add_option("--out", out_path, "trajectory CSV; the manifest goes to PATH.manifest.json")->required();

  // find-bstar
  auto* bstar = app.add_subcommand("find-bstar", "last zero of w1(T_b) below b = 1");
  std::vector<double> grid{0.05, 0.999, 200};
  double tol_b = 1e-8;
  bstar->add_option("--grid", grid, "lo,hi,n")->delimiter(',')->expected(3);
  bstar->add_option("--tol", tol_b, "bisection tolerance in b")->check(CLI::PositiveNumber);
  bstar->add_option("--manifest", manifest_path, "also write the manifest here");

  // shoot
  auto* shoot = app.add_subcommand("shoot", "co-integrate the eigen system for one Lambda");
  double lambda = 1.0;
  std::string eigen_out;
  shoot->add_option("--family", family, "a or b")->check(CLI::IsMember({"a", "b"}));
  shoot->add_option("--param", param, "family parameter")->required()->check(CLI::PositiveNumber);
  shoot->add_option("--lambda", lambda, "spectral parameter")->required()->check(CLI::PositiveNumber);
  shoot->add_option("--eps", eps, "launch time")->check(CLI::Range(1e-12, 0.1));
  shoot->add_option("--tol", tol, "integrator tolerance")->check(CLI::Range(1e-14, 1e-3));
  shoot->add_option("--eigen-out", eigen_out, "eigen trajectory CSV");
  shoot->add_option("--manifest", manifest_path, "also write the manifest here");

  // index-report
  auto* index = app.add_subcommand("index-report", "b*, sign portrait, Lambda* and the index bounds");
  nkh::cmd::IndexParams ip;
  index->add_option("--tol", ip.tol, "integrator tolerance")->check(CLI::Range(1e-14, 1e-3));
  index->add_option("--tol-b", ip.tol_b, "bisection tolerance for b*")->check(CLI::PositiveNumber);
  index->add_option("--tol-lambda", ip.tol_L, "bisection tolerance for Lambda*")->check(CLI::PositiveNumber);
  index->add_option("--manifest", manifest_path, "also write the manifest here");

  // legendre-scan
  auto* legendre = app.add_subcommand("legendre-scan", "sine-cone eigenvalue scan");
  std::string variant;
  std::vector<double> range{0.5, 13.0};
  int n = 60;
  legendre->add_option("--variant", variant, "printed or matrix (default: both)")
      ->check(CLI::IsMember({"printed", "matrix"}));
  legendre->add_option("--range", range, "lo,hi")->delimiter(',')->expected(2);
  legendre->add_option("--n", n, "grid points")->check(CLI::Range(2, 100000));
  legendre->add_option("--manifest", manifest_path, "also write the manifest here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return nkh::cmd::kUsageError;
  }

  try {
    if (*verify) return emit(nkh::cmd::verify_oracles(vopt), manifest_path);

    if (*half) {
      std::ofstream csv(out_path);
      if (!csv) {
        std::cerr << "cannot open " << out_path << "\n";
        return nkh::cmd::kUsageError;
      }
      const Outcome o = nkh::cmd::half({make_family(family, param), eps, tol}, &csv);
      return emit(o, out_path + ".manifest.json");
    }

    if (*bstar) {
      if (!(grid[0] > 0.0 && grid[0] < grid[1] && grid[1] <= 1.0 && grid[2] >= 2.0 && grid[2] == std::floor(grid[2]))) {
        std::cerr << "--grid needs 0 < lo < hi <= 1 and an integer n >= 2\n";
        return nkh::cmd::kUsageError;
      }
      nkh::cmd::BstarParams bp;
      bp.lo = grid[0];
      bp.hi = grid[1];
      bp.n = static_cast<int>(grid[2]);
      bp.tol_b = tol_b;
      return emit(nkh::cmd::find_bstar(bp), manifest_path);
    }

    if (*shoot) {
      std::optional<std::ofstream> csv;
      if (!eigen_out.empty()) {
        csv.emplace(eigen_out);
        if (!*csv) {
          std::cerr << "cannot open " << eigen_out << "\n";
          return nkh::cmd::kUsageError;
        }
      }
      const Outcome o = nkh::cmd::shoot({make_family(family, param), lambda, eps, tol}, csv ? &*csv : nullptr);
      return emit(o, manifest_path);
    }

    if (*index) return emit(nkh::cmd::index_report(ip), manifest_path);

    if (*legendre) {
      if (!(range[0] > 0.0 && range[0] < range[1] && range[1] <= 14.0)) {
        std::cerr << "--range needs 0 < lo < hi <= 14\n";
        return nkh::cmd::kUsageError;
      }
      nkh::cmd::LegendreParams lp;
      if (variant == "printed") lp.variant = nkh::LegendreVariant::AsPrinted;
      if (variant == "matrix") lp.variant = nkh::LegendreVariant::AsMatrix;
      lp.lo = range[0];
      lp.hi = range[1];
      lp.n = n;
      return emit(nkh::cmd::legendre_scan(lp), manifest_path);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return nkh::cmd::kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return nkh::cmd::kNumericFailure;
  }
  return nkh::cmd::kUsageError;
}
