#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "zohfl/harness.hpp"
#include "zohfl/oracles.hpp"

namespace zohfl {

namespace detail {

struct CliCommon {
  std::string config_path;
  std::string preset;
  std::string out_dir = "runs";
  std::int64_t seed = -1;       // overrides algo_seed when >= 0
  std::int64_t data_seed = -1;  // overrides data_seed when >= 0
  int index = 0;                // which config of a multi-run preset
};

inline std::vector<RunConfig> resolve_configs(const CliCommon& opt) {
  std::vector<RunConfig> configs;
  if (!opt.config_path.empty()) {
    std::ifstream in(opt.config_path);
    if (!in) throw ParameterError("config: cannot open " + opt.config_path);
    std::stringstream ss;
    ss << in.rdbuf();
    configs.push_back(config_from_string(ss.str()));
  } else if (!opt.preset.empty()) {
    configs = preset_configs(opt.preset);
  } else {
    throw ParameterError("config: pass --config PATH or --preset NAME");
  }
  for (auto& c : configs) {
    if (opt.seed >= 0) c.algo_seed = static_cast<std::uint64_t>(opt.seed);
    if (opt.data_seed >= 0) c.data_seed = static_cast<std::uint64_t>(opt.data_seed);
    c.validate();
  }
  return configs;
}

inline RunConfig resolve_single(const CliCommon& opt) {
  auto configs = resolve_configs(opt);
  if (opt.index < 0 || static_cast<std::size_t>(opt.index) >= configs.size()) {
    throw ParameterError("index: preset has " + std::to_string(configs.size()) + " configs");
  }
  return configs[static_cast<std::size_t>(opt.index)];
}

inline void add_common(CLI::App* cmd, CliCommon& opt, bool with_out = true) {
  cmd->add_option("--config", opt.config_path, "path to a JSON run config");
  cmd->add_option("--preset", opt.preset, "named preset (see README)");
  if (with_out) cmd->add_option("--out", opt.out_dir, "output directory");
  cmd->add_option("--seed", opt.seed, "override the algorithm seed");
  cmd->add_option("--data-seed", opt.data_seed, "override the data seed");
  cmd->add_option("--index", opt.index, "pick one config from a multi-run preset");
}

}  // namespace detail

// Exit codes: 0 success, 1 runtime abort, 2 malformed config/usage.
inline int cli_main(int argc, const char* const* argv) {
  CLI::App app{"zeroth-order hierarchical federated learning simulator"};
  app.require_subcommand(1);

  detail::CliCommon run_opt, part_opt, inspect_opt, sweep_opt;
  std::int64_t validate_seed = -1;
  std::string validate_out;

  auto* run_cmd = app.add_subcommand("run", "execute one configured run");
  detail::add_common(run_cmd, run_opt);

  auto* part_cmd = app.add_subcommand("partition", "write shards, plan and histogram");
  detail::add_common(part_cmd, part_opt);

  auto* inspect_cmd = app.add_subcommand("inspect", "print config and partition summary");
  detail::add_common(inspect_cmd, inspect_opt, false);

  auto* validate_cmd = app.add_subcommand("validate", "run the ground-truth check battery");
  validate_cmd->add_option("--seed", validate_seed, "battery seed");
  validate_cmd->add_option("--out", validate_out, "also write the reports to a file");

  auto* sweep_cmd = app.add_subcommand("sweep", "run every config of a preset");
  detail::add_common(sweep_cmd, sweep_opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run_cmd->parsed()) {
      const RunConfig cfg = detail::resolve_single(run_opt);
      const RunResult res = execute_run(cfg);
      write_run_files(res, run_opt.out_dir);
      append_summary({res}, run_opt.out_dir);
      std::cout << "run " << cfg.run_id << ": rounds=" << res.events.size()
                << " final_f1=" << res.final_f1 << " accuracy=" << res.final_accuracy << "\n";
      return 0;
    }
    if (part_cmd->parsed()) {
      const RunConfig cfg = detail::resolve_single(part_opt);
      const Partition part = prepare_partition(cfg);
      namespace fs = std::filesystem;
      std::error_code ec;
      fs::create_directories(part_opt.out_dir, ec);
      const auto open = [&](const std::string& name) {
        std::ofstream out(fs::path(part_opt.out_dir) / name);
        if (!out) throw Error(part_opt.out_dir + "/" + name + ": cannot open for writing");
        return out;
      };
      {
        auto out = open("server.csv");
        write_csv(out, part.server);
      }
      {
        auto out = open("test.csv");
        write_csv(out, part.test);
      }
      for (std::size_t i = 0; i < part.clients.size(); ++i) {
        auto out = open("client_" + std::to_string(i) + ".csv");
        write_csv(out, part.clients[i]);
      }
      {
        auto out = open("plan.json");
        nlohmann::json j;
        j["seed"] = part.plan.seed;
        j["alpha"] = part.plan.alpha;
        j["num_clients"] = part.plan.num_clients;
        j["server_fraction"] = part.plan.server_fraction;
        j["test_fraction"] = part.plan.test_fraction;
        j["resample_retries"] = part.plan.resample_retries;
        j["assignment"] = part.plan.assignment;
        out << j.dump(2) << '\n';
      }
      {
        auto out = open("histogram.csv");
        write_histogram_csv(out, partition_histogram(part));
      }
      std::cout << "partition written to " << part_opt.out_dir << "\n";
      return 0;
    }
    if (inspect_cmd->parsed()) {
      const RunConfig cfg = detail::resolve_single(inspect_opt);
      std::cout << config_to_string(cfg);
      const Partition part = prepare_partition(cfg);
      std::cout << "server_samples=" << part.server.num_samples
                << " test_samples=" << part.test.num_samples << "\n";
      write_histogram_csv(std::cout, partition_histogram(part));
      return 0;
    }
    if (validate_cmd->parsed()) {
      const auto reports = run_validation_battery(
          validate_seed >= 0 ? static_cast<std::uint64_t>(validate_seed) : 20240901ull);
      write_reports(std::cout, reports);
      if (!validate_out.empty()) {
        std::ofstream out(validate_out);
        if (!out) throw Error(validate_out + ": cannot open for writing");
        write_reports(out, reports);
      }
      const bool ok =
          std::all_of(reports.begin(), reports.end(), [](const auto& r) { return r.pass; });
      return ok ? 0 : 1;
    }
    if (sweep_cmd->parsed()) {
      if (sweep_opt.preset.empty()) throw ParameterError("sweep: --preset required");
      const auto configs = detail::resolve_configs(sweep_opt);
      std::vector<RunResult> results;
      results.reserve(configs.size());
      for (const auto& cfg : configs) {
        std::cout << "sweep: " << cfg.run_id << "...\n";
        results.push_back(execute_run(cfg));
        write_run_files(results.back(), sweep_opt.out_dir);
      }
      append_summary(results, sweep_opt.out_dir);
      std::cout << "sweep complete: " << results.size() << " runs in " << sweep_opt.out_dir
                << "\n";
      return 0;
    }
  } catch (const ParameterError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DimensionError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace zohfl
