#include <CLI11.hpp>

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <pthread.h>

#include "aesp/crypto/keys.hpp"
#include "aesp/crypto/random.hpp"
#include "aesp/error.hpp"
#include "aesp/eval/bench.hpp"
#include "aesp/eval/corpus.hpp"
#include "aesp/eval/criteria.hpp"
#include "aesp/eval/gate.hpp"
#include "aesp/eval/linkability.hpp"
#include "aesp/gateway/demo.hpp"
#include "aesp/gateway/gateway.hpp"
#include "aesp/gateway/server.hpp"

using namespace aesp;

namespace {

// exit codes
constexpr int kOk = 0;
constexpr int kThresholdFailed = 1;
constexpr int kUsage = 2;
constexpr int kRuntime = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::storage_failure, "cannot write " + path);
  out << text;
  if (!out) throw Error(Errc::storage_failure, "short write to " + path);
}

/// Reports failures to stderr; returns the exit code.
int verdict(const std::vector<std::string>& failures) {
  for (const auto& f : failures) std::cerr << "FAIL: " << f << "\n";
  return failures.empty() ? kOk : kThresholdFailed;
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

struct CorpusSource {
  std::string path;
  std::uint64_t seed = 42;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--corpus", path, "Corpus JSON written by `aesp corpus`");
    cmd->add_option("--seed", seed, "Generate the corpus from this seed instead")->capture_default_str();
  }
  eval::Corpus load() const {
    if (path.empty()) return eval::generate_corpus(seed);
    return eval::Corpus::from_json(parse_json(read_file(path)));
  }
};

Json corpus_summary(const eval::Corpus& c) {
  std::map<std::string, std::size_t> strata;
  for (const auto& r : c.requests) {
    if (r.stratum) ++strata[std::string(policy::to_string(*r.stratum))];
  }
  return Json{{"seed", c.seed},
              {"requests", c.requests.size()},
              {"attack_single", c.count(eval::Label::attack_single)},
              {"attack_aggregate", c.count(eval::Label::attack_aggregate)},
              {"legitimate", c.count(eval::Label::legitimate)},
              {"agents", c.agents.size()},
              {"strata", strata}};
}

Json report_json(const eval::SecurityReport& r) {
  auto j = r.to_json();
  j.erase("outcomes");  // per-request list; large and rarely wanted on a terminal
  return j;
}

int cmd_corpus(std::uint64_t seed, const std::string& out, bool json) {
  auto corpus = eval::generate_corpus(seed);
  if (out.empty()) {
    std::cout << canonical_json(corpus.to_json()) << "\n";
    return kOk;
  }
  write_file(out, canonical_json(corpus.to_json()));
  auto s = corpus_summary(corpus);
  if (json) {
    std::cout << canonical_json(s) << "\n";
  } else {
    std::cout << "wrote " << out << ": " << s["requests"] << " requests (" << s["attack_single"] << " single, "
              << s["attack_aggregate"] << " aggregate, " << s["legitimate"] << " legitimate), seed " << seed
              << "\n";
  }
  return kOk;
}

int cmd_gate(const std::string& config, const std::string& human, const CorpusSource& src, bool json) {
  auto corpus = src.load();
  auto h = eval::human_from_string(human);
  if (config != "all") {
    auto id = eval::gate_from_string(config);
    auto report = eval::run_gate(eval::GateConfig::standard(id), corpus, h);
    if (json) std::cout << canonical_json(report_json(report)) << "\n";
    else std::cout << report.to_markdown();
    return id == eval::GateId::FULL ? verdict(eval::full_gate_failures(report)) : kOk;
  }
  std::vector<eval::SecurityReport> baselines;
  for (auto id : {eval::GateId::B0, eval::GateId::B1, eval::GateId::B2, eval::GateId::B3}) {
    baselines.push_back(eval::run_gate(eval::GateConfig::standard(id), corpus, h));
  }
  auto full = eval::run_gate(eval::GateConfig::standard(eval::GateId::FULL), corpus, h);
  if (json) {
    Json arr = Json::array();
    for (const auto& r : baselines) arr.push_back(report_json(r));
    arr.push_back(report_json(full));
    std::cout << canonical_json(arr) << "\n";
  } else {
    for (const auto& r : baselines) std::cout << r.to_markdown() << "\n";
    std::cout << full.to_markdown();
  }
  return verdict(concat(eval::monotonicity_failures(baselines), eval::full_gate_failures(full)));
}

int cmd_ablate(const CorpusSource& src, bool json) {
  auto report = eval::run_ablation(src.load());
  if (json) std::cout << canonical_json(report.to_json()) << "\n";
  else std::cout << report.to_markdown();
  return verdict(eval::ablation_failures(report));
}

int cmd_bench(const std::string& ops_text, const eval::BenchOptions& options, bool json) {
  std::vector<eval::BenchOp> ops;
  if (ops_text.empty() || ops_text == "all") {
    ops.assign(std::begin(eval::kAllBenchOps), std::end(eval::kAllBenchOps));
  } else {
    std::stringstream ss(ops_text);
    for (std::string name; std::getline(ss, name, ',');) ops.push_back(eval::bench_op_from_string(name));
  }
  auto report = eval::run_latency_bench(ops, options);
  if (json) std::cout << canonical_json(report.to_json()) << "\n";
  else std::cout << report.to_markdown();
  if (!report.find(eval::BenchOp::end_to_end_authorize)) return kOk;
  return verdict(eval::latency_failures(report));
}

int cmd_privacy(const std::string& config, const eval::LinkabilityOptions& options, bool json) {
  if (config != "all") {
    auto result = eval::simulate_linkability(eval::link_config_from_string(config), options);
    if (json) {
      std::cout << canonical_json(result.to_json()) << "\n";
    } else {
      char line[200];
      std::snprintf(line, sizeof line, "%s: %zu addresses, %zu consolidations, linkage %.4f, precision %.4f\n",
                    std::string(eval::to_string(result.config)).c_str(), result.addresses,
                    result.consolidation_txs, result.at_epsilon.linkage_rate(), result.at_epsilon.precision());
      std::cout << line;
    }
    return kOk;
  }
  auto report = eval::run_linkability(options);
  if (json) std::cout << canonical_json(report.to_json()) << "\n";
  else std::cout << report.to_markdown();
  return verdict(eval::linkability_failures(report));
}

int cmd_demo(const std::string& name, bool json) {
  auto result = gateway::run_demo(name, [&](const gateway::DemoEvent& e) {
    if (!json) std::cout << e.to_text(1773655200000) << "\n";
  });
  if (json) {
    std::cout << canonical_json(result.to_json()) << "\n";
  } else {
    std::cout << (result.ok ? "demo " + name + ": ok" : "demo " + name + ": FAILED") << "\n";
  }
  return verdict(result.failures);
}

/// Config file for `serve`:
///   {"host", "port", "identity": {"secret_hex", "label"},
///    "agents": [{"agent_id", "policies": [...]}],
///    "review_deadline_ms", "tz_offset_minutes",
///    "server": {"sse_buffer", "max_streams", "worker_threads",
///               "sweep_interval_ms", "keepalive_ms"}}
int cmd_serve(const std::string& config_path, std::string host, int port) {
  Json config = config_path.empty() ? Json::object() : parse_json(read_file(config_path));
  if (host.empty()) host = config.value("host", "127.0.0.1");
  if (port < 0) port = config.value("port", 8080);

  crypto::IdentityRoot root;
  if (config.contains("identity")) {
    const auto& id = config["identity"];
    root = crypto::derive_identity_root(
        {crypto::from_hex(id.at("secret_hex").get<std::string>()), id.value("label", "aesp")});
  } else {
    crypto::Bytes secret(32);
    crypto::system_random().fill(secret);
    root = crypto::derive_identity_root({secret, "ephemeral"});
    std::cerr << "warning: no identity in config; using a throwaway root\n";
  }

  std::shared_ptr<storage::StorageAdapter> store = std::make_shared<storage::MemoryStorage>();
  if (const char* dir = std::getenv("AESP_STORAGE_DIR"); dir && *dir) {
    store = std::make_shared<storage::FileStorage>(dir);
  }

  gateway::GatewayOptions gopts;
  gopts.review_deadline_ms = config.value("review_deadline_ms", gopts.review_deadline_ms);
  gopts.tz_offset_minutes = config.value("tz_offset_minutes", 0);
  gateway::Gateway gw(root, store, gopts);
  for (const auto& a : config.value("agents", Json::array())) {
    std::vector<policy::Policy> pols;
    for (const auto& p : a.at("policies")) pols.push_back(policy::Policy::from_json(p));
    gw.register_agent(a.at("agent_id").get<std::string>(), std::move(pols));
  }

  gateway::ServerOptions sopts;
  const auto s = config.value("server", Json::object());
  sopts.sse_buffer = s.value("sse_buffer", sopts.sse_buffer);
  sopts.max_streams = s.value("max_streams", sopts.max_streams);
  sopts.worker_threads = s.value("worker_threads", sopts.worker_threads);
  sopts.sweep_interval = std::chrono::milliseconds(s.value("sweep_interval_ms", sopts.sweep_interval.count()));
  sopts.keepalive = std::chrono::milliseconds(s.value("keepalive_ms", sopts.keepalive.count()));

  // block the stop signals everywhere so only sigwait below sees them
  sigset_t stop_signals;
  sigemptyset(&stop_signals);
  sigaddset(&stop_signals, SIGINT);
  sigaddset(&stop_signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);

  gateway::ApiServer server(gw, sopts);
  const int bound = server.start(host, port);
  std::cout << "listening on http://" << host << ":" << bound << " with " << gw.agent_ids().size() << " agent(s)"
            << std::endl;
  int sig = 0;
  sigwait(&stop_signals, &sig);
  std::cout << "shutting down" << std::endl;
  server.stop();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Agent economic safety toolkit"};
  app.require_subcommand(1);
  int code = kOk;
  bool json = false;
  auto json_flag = [&](CLI::App* cmd) { cmd->add_flag("--json", json, "Machine-readable output"); };

  auto* corpus = app.add_subcommand("corpus", "Generate the seeded evaluation corpus");
  std::uint64_t corpus_seed = 42;
  std::string corpus_out;
  corpus->add_option("--seed", corpus_seed)->capture_default_str();
  corpus->add_option("--out", corpus_out, "Output file (stdout when omitted)");
  json_flag(corpus);
  corpus->callback([&] { code = cmd_corpus(corpus_seed, corpus_out, json); });

  auto* gate = app.add_subcommand("gate", "Replay the corpus through a gate configuration");
  std::string gate_config = "FULL";
  std::string human = "optimal";
  CorpusSource gate_src;
  gate->add_option("--config", gate_config, "B0, B1, B2, B3, FULL or all")->capture_default_str();
  gate->add_option("--human", human, "Simulated reviewer: optimal, approve_all, reject_all")->capture_default_str();
  gate_src.add_to(gate);
  json_flag(gate);
  gate->callback([&] { code = cmd_gate(gate_config, human, gate_src, json); });

  auto* ablate = app.add_subcommand("ablate", "Remove one check at a time from B3");
  CorpusSource ablate_src;
  ablate_src.add_to(ablate);
  json_flag(ablate);
  ablate->callback([&] { code = cmd_ablate(ablate_src, json); });

  auto* bench = app.add_subcommand("bench", "Latency of the core operations");
  std::string ops;
  eval::BenchOptions bench_opts;
  bench->add_option("--ops", ops, "Comma-separated operations (default all)");
  bench->add_option("--warmup", bench_opts.warmup)->capture_default_str();
  bench->add_option("--iterations", bench_opts.iterations)->capture_default_str();
  bench->add_option("--trials", bench_opts.trials)->capture_default_str();
  json_flag(bench);
  bench->callback([&] { code = cmd_bench(ops, bench_opts, json); });

  auto* privacy_sim = app.add_subcommand("privacy-sim", "Address clustering against consolidation schedules");
  std::string link_config = "all";
  eval::LinkabilityOptions link_opts;
  double epsilon_min = 5.0;
  privacy_sim->add_option("--config", link_config, "none, jitter_only, full or all")->capture_default_str();
  privacy_sim->add_option("--seed", link_opts.seed)->capture_default_str();
  privacy_sim->add_option("--tx", link_opts.n_tx, "Funding transactions")->capture_default_str();
  privacy_sim->add_option("--agents", link_opts.n_agents)->capture_default_str();
  privacy_sim->add_option("--epsilon-min", epsilon_min, "Timing window of the adversary")->capture_default_str();
  json_flag(privacy_sim);
  privacy_sim->callback([&] {
    link_opts.epsilon_ms = static_cast<std::int64_t>(epsilon_min * 60'000);
    code = cmd_privacy(link_config, link_opts, json);
  });

  auto* serve = app.add_subcommand("serve", "Run the review API");
  std::string serve_config;
  std::string host;
  int port = -1;
  serve->add_option("--config", serve_config, "JSON config with agents, policies and server options");
  serve->add_option("--host", host, "Bind address (default 127.0.0.1)");
  serve->add_option("--port", port, "Port (default 8080, 0 picks one)");
  serve->callback([&] { code = cmd_serve(serve_config, host, port); });

  auto* demo = app.add_subcommand("demo", "Run a scenario end to end and print its trace");
  std::string demo_name;
  demo->add_option("scenario", demo_name, "grocery, cloud or nft")
      ->required()
      ->check(CLI::IsMember(gateway::demo_names()));
  json_flag(demo);
  demo->callback([&] { code = cmd_demo(demo_name, json); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    const bool usage = e.code() == Errc::invalid_argument || e.code() == Errc::parse_error;
    return usage ? kUsage : kRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return code;
}
