#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>

#include "gcnsim/gcnsim.hpp"

namespace {

using namespace gcnsim;
using oj = nlohmann::ordered_json;

// Structural checks that need the built core graph.
void check_core(const Scenario& sc) { CoreGraph graph(sc.core, CoreMode::Sdn); }

oj oracle_tea(const Scenario& sc) {
  oj out = oj::array();
  for (const auto& node : sc.gcs) {
    const auto demand = nominal_demand(sc, node.id);
    const auto greedy = tea_allocate(node.generation, demand, node.battery_init, node.battery_capacity);
    const auto oracle = tea_oracle(node.generation, demand, node.battery_init, node.battery_capacity, 0.05);
    auto opt = [](const std::optional<double>& v) { return v ? oj(*v) : oj(nullptr); };
    out.push_back({{"gcs", node.id.value},
                   {"tea_sigma", opt(greedy.sigma)},
                   {"tea_allocation", greedy.allocation},
                   {"oracle_sigma", opt(oracle.sigma)},
                   {"oracle_allocation", oracle.allocation}});
  }
  return out;
}

oj oracle_seb(const Scenario& sc) {
  const CoreGraph graph(sc.core, CoreMode::Sdn);
  std::vector<TeaResult> tea;
  for (const auto& node : sc.gcs) {
    tea.push_back(tea_allocate(node.generation, nominal_demand(sc, node.id), node.battery_init, node.battery_capacity));
  }
  oj out = oj::array();
  for (std::size_t t = 0; t < sc.slot_count(); ++t) {
    const SlotState state = SlotState::initial(sc, t);
    std::vector<double> provision;
    for (const auto& r : tea) provision.push_back(r.allocation[t]);
    const auto greedy = seb_migrate(sc, graph, state, provision);
    const auto oracle = seb_oracle(sc, graph, state, provision);
    out.push_back({{"slot", t + 1},
                   {"noop_sigma", greedy.sigma_before},
                   {"greedy_sigma", greedy.sigma_after},
                   {"greedy_moves", greedy.moves.size()},
                   {"oracle_sigma", oracle.sigma}});
  }
  return out;
}

int report_error(const std::exception& e, int code) {
  std::cerr << "gcnsim: " << e.what() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Green cloudlet network simulator"};
  app.require_subcommand(1);

  std::string scenario_file, out_dir, seb = "migrate", tea = "equal-ratio", core = "sdn";
  std::optional<std::uint64_t> seed;
  auto* run = app.add_subcommand("run", "simulate a scenario and write metrics");
  run->add_option("--scenario", scenario_file, "scenario JSON")->required();
  run->add_option("--seb", seb, "spatial balancing")->check(CLI::IsMember({"migrate", "pilot", "both", "off"}));
  run->add_option("--tea", tea, "temporal allocation")->check(CLI::IsMember({"equal-ratio", "uniform"}));
  run->add_option("--core", core, "core routing")->check(CLI::IsMember({"sdn", "epc"}));
  run->add_option("--seed", seed, "overrides the scenario seed");
  run->add_option("--out", out_dir, "output directory")->required();

  std::string validate_file;
  auto* validate = app.add_subcommand("validate", "check a scenario file");
  validate->add_option("file", validate_file)->required();

  std::string dir_a, dir_b;
  auto* cmp = app.add_subcommand("compare", "diff the totals of two runs");
  cmp->add_option("dirA", dir_a)->required();
  cmp->add_option("dirB", dir_b)->required();

  std::string oracle_kind, oracle_file;
  auto* oracle = app.add_subcommand("oracle", "compare heuristics against exhaustive search");
  oracle->add_option("kind", oracle_kind)->required()->check(CLI::IsMember({"tea", "seb"}));
  oracle->add_option("file", oracle_file)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*run) {
      const Scenario sc = load_scenario(scenario_file);
      check_core(sc);
      const std::map<std::string, SebMode> seb_modes{
          {"migrate", SebMode::Migrate}, {"pilot", SebMode::Pilot}, {"both", SebMode::Both}, {"off", SebMode::Off}};
      Policy policy;
      policy.seb = seb_modes.at(seb);
      policy.tea = tea == "uniform" ? TeaMode::Uniform : TeaMode::EqualRatio;
      policy.core = core == "epc" ? CoreMode::Epc : CoreMode::Sdn;
      policy.seed = seed;
      const auto report = gcnsim::run(sc, policy);
      emit_metrics(report, out_dir);
      log(LogLevel::Info, "wrote " + out_dir);
    } else if (*validate) {
      const Scenario sc = load_scenario(validate_file);
      check_core(sc);
      std::cout << "ok " << scenario_hash(sc) << '\n';
    } else if (*cmp) {
      std::cout << to_json(compare(load_summary(dir_a), load_summary(dir_b))).dump(2) << '\n';
    } else if (*oracle) {
      const Scenario sc = load_scenario(oracle_file);
      check_core(sc);
      std::cout << (oracle_kind == "tea" ? oracle_tea(sc) : oracle_seb(sc)).dump(2) << '\n';
    }
  } catch (const ScenarioError& e) {
    return report_error(e, 2);
  } catch (const std::exception& e) {
    return report_error(e, 3);
  }
  return 0;
}
