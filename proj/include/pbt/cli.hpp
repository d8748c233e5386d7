/*
 * Copyright 2026 The pbt Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef PBT_CLI_HPP
#define PBT_CLI_HPP

// C++ standard libraries
#include <cstdint>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

// external libraries
#include <CLI11.hpp>
#include <nlohmann/json.hpp>

// local sources
#include "pbt/harness.hpp"
#include "pbt/workload.hpp"

namespace pbt::cli
{
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitInvariant = 3;

namespace detail
{
inline Mix
ParseMix(const std::string &text)
{
  std::vector<double> parts;
  std::stringstream ss{text};
  std::string item;
  while (std::getline(ss, item, ',')) parts.push_back(std::stod(item));
  if (parts.size() != 4) throw std::invalid_argument{"--mix takes four comma-separated fractions"};
  Mix mix{parts[0], parts[1], parts[2], parts[3]};
  mix.Validate();
  return mix;
}

/// Accepts "14..18" (powers of two) or a comma list of op counts.
inline std::vector<std::uint64_t>
ParseGrid(const std::string &text)
{
  std::vector<std::uint64_t> out;
  if (auto dots = text.find(".."); dots != std::string::npos) {
    const auto lo = std::stoull(text.substr(0, dots));
    const auto hi = std::stoull(text.substr(dots + 2));
    if (lo > hi || hi > 40) throw std::invalid_argument{"bad --n-grid exponent range"};
    for (auto e = lo; e <= hi; ++e) out.push_back(std::uint64_t{1} << e);
    return out;
  }
  std::stringstream ss{text};
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoull(item));
  if (out.empty()) throw std::invalid_argument{"empty --n-grid"};
  return out;
}

inline void
AddStoreFlags(CLI::App &cmd, StoreConfig &store)
{
  cmd.add_option("--block-size,-B", store.block_elems, "records per block")
      ->capture_default_str()
      ->check(CLI::Range(std::size_t{2}, std::size_t{1} << 20));
  cmd.add_option("--fanout,-m", store.fanout, "buffer blocks per node, even and >= 4")
      ->capture_default_str()
      ->check([](const std::string &s) {
        const auto v = std::stoull(s);
        return v >= 4 && v % 2 == 0 ? std::string{} : std::string{"fanout must be even and >= 4"};
      });
}
}  // namespace detail

/**
 * @brief Entry point shared by the `pbt` binary and the CLI tests.
 *
 * Exit codes: 0 ok, 1 verification or envelope failure, 2 usage or parse error,
 * 3 structural error or audit violation.
 */
inline int
Main(int argc, const char *const *argv, std::ostream &out, std::ostream &err)
{
  CLI::App app{"persistent buffer tree workbench", "pbt"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  std::uint64_t seed = 1;
  app.add_option("--seed", seed, "default seed")->envname("PBT_SEED")->capture_default_str();

  // run
  StoreConfig run_store{};
  std::string run_file;
  std::string store_spec = "mem";
  std::string format = "json";
  auto *run = app.add_subcommand("run", "execute a workload file and print its report");
  run->add_option("file", run_file, "workload file")->required();
  detail::AddStoreFlags(*run, run_store);
  run->add_option("--seed", seed, "priority seed")->envname("PBT_SEED");
  run->add_option("--store", store_spec, "'mem' or a file path")->capture_default_str();
  run->add_option("--out", format, "json or csv")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();

  // verify
  StoreConfig verify_store{};
  std::uint64_t verify_ops = 10000;
  std::uint64_t verify_seeds = 20;
  std::string mix_text = "0.5,0.2,0.1,0.2";
  bool inject_fault = false;
  std::size_t jobs = 1;
  std::string artifact_dir = "pbt_failures";
  auto *verify = app.add_subcommand("verify", "compare the tree against the oracle over many seeds");
  verify->add_option("--ops", verify_ops, "ops per workload")->capture_default_str();
  verify->add_option("--seeds", verify_seeds, "number of seeds")->capture_default_str();
  detail::AddStoreFlags(*verify, verify_store);
  verify->add_option("--seed", seed, "first seed")->envname("PBT_SEED");
  verify->add_option("--mix", mix_text, "insert,update,delete,query fractions")
      ->capture_default_str();
  verify->add_flag("--inject-fault", inject_fault, "drop subtree reports");
  verify->add_option("--jobs,-j", jobs, "parallel cells")->capture_default_str();
  verify->add_option("--artifact-dir", artifact_dir, "where failing workloads are written")
      ->capture_default_str();

  // scale
  StoreConfig scale_store{};
  std::string grid_text = "14..18";
  std::string table_format = "table";
  std::string scale_mix = "1,0,0,0";
  auto *scale = app.add_subcommand("scale", "measure total I/O over a doubling grid");
  scale->add_option("--n-grid", grid_text, "'lo..hi' powers of two or a comma list")
      ->capture_default_str();
  detail::AddStoreFlags(*scale, scale_store);
  scale->add_option("--seed", seed, "workload seed")->envname("PBT_SEED");
  scale->add_option("--mix", scale_mix, "insert,update,delete,query fractions")
      ->capture_default_str();
  scale->add_option("--jobs,-j", jobs, "parallel cells")->capture_default_str();
  scale->add_option("--out", table_format, "table, json or csv")
      ->check(CLI::IsMember({"table", "json", "csv"}))
      ->capture_default_str();

  std::vector<std::string> args;
  for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
  try {
    app.parse(std::move(args));
  } catch (const CLI::CallForHelp &) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp &) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError &e) {
    err << "pbt: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (*run) {
      Workload ops;
      try {
        ops = LoadWorkload(run_file);
      } catch (const ParseError &e) {
        err << "pbt: " << run_file << ": " << e.what() << "\n";
        return kExitUsage;
      }
      RunConfig cfg;
      cfg.store = run_store;
      cfg.tree_seed = seed;
      cfg.keep_results = true;
      if (store_spec != "mem") cfg.store_path = store_spec;
      RunReport rep;
      try {
        rep = RunWorkload(ops, cfg);
      } catch (const WorkloadError &e) {
        err << "pbt: " << run_file << ": " << e.what() << "\n";
        return kExitUsage;
      }
      if (format == "csv") {
        out << CsvHeader() << "\n" << ToCsvRow(rep) << "\n";
      } else {
        out << ToJson(rep).dump(2) << "\n";
      }
      if (!rep.structural_errors.empty() || !rep.audit_violations.empty()) return kExitInvariant;
      if (!rep.mismatches.empty()) return kExitFailure;
      return kExitOk;
    }

    if (*verify) {
      WorkloadSpec spec;
      spec.n_ops = verify_ops;
      spec.mix = detail::ParseMix(mix_text);
      RunConfig cfg;
      cfg.store = verify_store;
      cfg.inject_fault = inject_fault;
      const auto res = RunEquivalence(spec, cfg, seed, verify_seeds, jobs, artifact_dir);
      std::uint64_t failed = 0;
      for (const auto &r : res.reports) {
        if (!r.Clean()) ++failed;
        out << "seed " << r.seed << ": " << (r.Clean() ? "ok" : "MISMATCH") << " queries="
            << r.queries << " mismatches=" << r.mismatches.size()
            << " errors=" << r.structural_errors.size()
            << " audit=" << r.audit_violations.size() << "\n";
      }
      for (const auto &a : res.artifacts) out << "failure artifact: " << a.string() << "\n";
      out << (failed == 0 ? "verify: ok" : "verify: FAILED") << " (" << res.reports.size() - failed
          << "/" << res.reports.size() << " seeds clean)\n";
      return failed == 0 ? kExitOk : kExitFailure;
    }

    if (*scale) {
      WorkloadSpec spec;
      spec.mix = detail::ParseMix(scale_mix);
      spec.seed = seed;
      RunConfig cfg;
      cfg.store = scale_store;
      cfg.tree_seed = seed;
      const auto res = RunScaling(detail::ParseGrid(grid_text), spec, cfg, jobs);
      const bool ok = res.StableWithin(2.0) && res.PerOpWithinBound() && res.SpaceWithinBound()
                      && std::all_of(res.points.begin(), res.points.end(),
                                     [](const auto &p) { return p.report.Clean(); });
      if (table_format == "json") {
        nlohmann::json j = nlohmann::json::array();
        for (const auto &p : res.points) {
          j.push_back({{"n_ops", p.n_ops},
                       {"total_io", p.total_io},
                       {"r_total", p.r_total},
                       {"ratio", p.ratio},
                       {"per_op_io", p.per_op_io},
                       {"per_op_bound", p.per_op_bound},
                       {"high_water_blocks", p.high_water},
                       {"space_bound", p.space_bound},
                       {"height", p.report.height}});
        }
        out << nlohmann::json{{"points", j}, {"ratio_spread", res.ratio_spread}, {"ok", ok}}.dump(2)
            << "\n";
      } else if (table_format == "csv") {
        out << "n_ops,total_io,r_total,ratio,per_op_io,per_op_bound,high_water_blocks,space_bound,"
               "height\n";
        for (const auto &p : res.points) {
          out << p.n_ops << ',' << p.total_io << ',' << p.r_total << ',' << p.ratio << ','
              << p.per_op_io << ',' << p.per_op_bound << ',' << p.high_water << ','
              << p.space_bound << ',' << p.report.height << "\n";
        }
      } else {
        out << std::setw(10) << "N" << std::setw(12) << "totalIO" << std::setw(10) << "ratio"
            << std::setw(12) << "per-op" << std::setw(12) << "bound" << std::setw(12)
            << "highwater" << std::setw(8) << "height" << "\n";
        for (const auto &p : res.points) {
          out << std::setw(10) << p.n_ops << std::setw(12) << p.total_io << std::setw(10)
              << std::fixed << std::setprecision(3) << p.ratio << std::setw(12) << p.per_op_io
              << std::setw(12) << p.per_op_bound << std::setw(12) << p.high_water
              << std::setw(8) << p.report.height << "\n";
        }
        out << "ratio spread " << res.ratio_spread << (ok ? " ok" : " FAILED") << "\n";
      }
      return ok ? kExitOk : kExitFailure;
    }
  } catch (const StructuralError &e) {
    err << "pbt: " << e.what() << "\n";
    return kExitInvariant;
  } catch (const std::invalid_argument &e) {
    err << "pbt: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception &e) {
    err << "pbt: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace pbt::cli

#endif  // PBT_CLI_HPP
