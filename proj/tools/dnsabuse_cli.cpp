#include <csignal>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "dnsabuse/pipeline.hpp"
#include "dnsabuse/squatgen.hpp"
#include "dnsabuse/textio.hpp"

namespace {

using namespace dnsabuse;
namespace pl = dnsabuse::pipeline;

volatile std::sig_atomic_t g_interrupted = 0;

void on_signal(int) { g_interrupted = 1; }

std::string kebab(std::string s) {
  std::replace(s.begin(), s.end(), '_', '-');
  return s;
}

int print_result(const pl::CommandResult& r) {
  for (const auto& m : r.messages) std::cout << m << "\n";
  for (const auto& f : r.files) std::cerr << "wrote " << f.string() << "\n";
  return 0;
}

int dump_squats(const pl::PipelineConfig& cfg, const std::string& what, const std::string& domain,
                const std::string& brand_id) {
  if (what == "homoglyphs") {
    CsvWriter csv({"from", "to"});
    for (const auto& [from, to] : squatgen::homoglyph_table()) csv.add_row({from, to});
    std::cout << csv.str();
    return 0;
  }
  std::set<squatgen::SquatCandidate> all;
  if (!domain.empty()) {
    all = brand_id.empty() ? squatgen::generate(domain) : squatgen::generate(domain, brand_id);
  } else {
    if (cfg.brand_catalog.empty()) throw Error(ErrorCode::InvalidArgument, "config: give --domain or brand_catalog");
    const auto catalog = squatgen::load_brand_catalog(cfg.brand_catalog, cfg.brand_top_n, cfg.squat_top_n);
    for (size_t i = 0; i < catalog.brands.size() && i < catalog.squat_top_n; ++i) {
      const auto& b = catalog.brands[i];
      auto part = squatgen::generate(b.canonical_domain, b.brand_id);
      all.insert(part.begin(), part.end());
    }
  }
  CsvWriter csv({"label", "technique", "brand_id"});
  for (const auto& c : all) csv.add_row({c.label, std::string(squatgen::to_string(c.technique)), c.brand_id});
  std::cout << csv.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phishing-domain ingestion, classification, DNS monitoring and lifecycle reporting"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);

  std::map<std::string, std::vector<std::string>> overrides;
  for (const auto& key : pl::config_keys()) {
    auto& slot = overrides[key];
    const auto names = "--" + key + (key.find('_') != std::string::npos ? ",--" + kebab(key) : "");
    auto* opt = app.add_option(names, slot, "overrides config key " + key);
    if (key != "feeds") opt->expected(1);
  }

  auto* ingest = app.add_subcommand("ingest", "Build the domain table from the feeds");
  auto* classify = app.add_subcommand("classify", "Classify domains and summarize flags");
  auto* squat = app.add_subcommand("squatgen", "Inspect the squatting engine");
  auto* dump = squat->add_subcommand("dump", "Print homoglyphs or generated candidates as CSV");
  squat->require_subcommand(1);
  std::string dump_what = "candidates", dump_domain, dump_brand;
  dump->add_option("what", dump_what, "homoglyphs | candidates")->check(CLI::IsMember({"homoglyphs", "candidates"}));
  dump->add_option("--domain", dump_domain, "brand domain to permute (default: the brand catalog)");
  dump->add_option("--brand-id,--brand_id", dump_brand, "brand id to attribute candidates to");
  auto* monitor = app.add_subcommand("monitor", "Collect DNS snapshots and analyze changes and TTLs");
  std::string mode = "simulate";
  monitor->add_option("--mode", mode, "simulate | live")->check(CLI::IsMember({"simulate", "live"}));
  auto* life = app.add_subcommand("lifecycle", "Registration, detection and takedown delays");
  auto* report = app.add_subcommand("report", "Run every stage and write all report tables");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    pl::PipelineConfig cfg;
    if (!config_path.empty()) cfg = pl::load_config(config_path);
    for (const auto& key : pl::config_keys()) {
      const auto& values = overrides[key];
      if (values.empty()) continue;
      if (key == "feeds") cfg.feeds.clear();
      for (const auto& v : values) pl::set_config_value(cfg, key, v, {});
    }

    if (*ingest) return print_result(pl::cmd_ingest(cfg));
    if (*classify) return print_result(pl::cmd_classify(cfg));
    if (*dump) return dump_squats(cfg, dump_what, dump_domain, dump_brand);
    if (*monitor) {
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      const auto m = mode == "live" ? pl::MonitorMode::Live : pl::MonitorMode::Simulate;
      return print_result(pl::cmd_monitor(cfg, m, [] { return g_interrupted != 0; }));
    }
    if (*life) return print_result(pl::cmd_lifecycle(cfg));
    if (*report) return print_result(pl::cmd_report(cfg));
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return pl::exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
