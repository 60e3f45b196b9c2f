// Criteria that need the Bitcoin-OTC and Bitcoin-Alpha edge lists. Looks in
// $TRUSTGUARD_DATA_DIR (default: <repo>/data) for soc-sign-bitcoinotc.csv and
// soc-sign-bitcoinalpha.csv; prints SKIP and exits 77 when either is missing.
// Optional arguments select criteria, e.g. `acceptance_datasets 6 3`.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <set>
#include <string>

#include "run_config.hpp"
#include "trustguard/log.hpp"

#ifndef TRUSTGUARD_SOURCE_DIR
#error "TRUSTGUARD_SOURCE_DIR must be defined"
#endif

using namespace trustguard;
namespace fs = std::filesystem;

namespace {

constexpr int kSkip = 77;

struct Dataset {
  std::string name;
  fs::path path;
  DynamicGraph graph;
  cli::RunConfig config;  // dataset profile, defaults otherwise
};

HarnessOptions options() {
  const char* t = std::getenv("TRUSTGUARD_THREADS");
  return {t ? static_cast<std::size_t>(std::strtoul(t, nullptr, 10)) : 0};
}

double minutes_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / 60.0;
}

const char* verdict(bool ok) { return ok ? "PASS" : "FAIL"; }

class Runner {
 public:
  explicit Runner(std::vector<Dataset>& data) : data_(data) {}

  Dataset& otc() { return data_[0]; }

  // Task ① sweep over t = 2..n-1 with the dataset profile, cached per key.
  const MetricReport& report(Dataset& d, const std::string& key, cli::RunConfig c) {
    const std::string full = d.name + "/" + key;
    auto it = cache_.find(full);
    if (it != cache_.end()) return it->second;
    const auto start = std::chrono::steady_clock::now();
    auto r = run_task(d.graph, cli::make_task_spec(c), cli::make_train_config(c), options());
    minutes_[full] = minutes_since(start);
    return cache_.emplace(full, std::move(r)).first->second;
  }
  double minutes(const std::string& key) const { return minutes_.at(key); }

  std::vector<Dataset>& data_;

 private:
  std::map<std::string, MetricReport> cache_;
  std::map<std::string, double> minutes_;
};

bool criterion1(Runner& run) {
  const auto& r = run.report(run.otc(), "single", run.otc().config);
  const double min = run.minutes("otc/single");
  const bool ok = r.mean.mcc >= 0.34 && r.mean.auc >= 0.72 && min <= 60.0;
  std::printf("%s criterion 1: OTC task single MCC %.3f±%.3f (>= 0.34), AUC %.3f±%.3f (>= 0.72), %.1f min (<= 60)\n",
              verdict(ok), r.mean.mcc, r.stddev.mcc, r.mean.auc, r.stddev.auc, min);
  return ok;
}

bool criterion2(Runner& run) {
  const auto& single = run.report(run.otc(), "single", run.otc().config);
  cli::RunConfig c = run.otc().config;
  c.task = "multi";
  const auto& r = run.report(run.otc(), "multi", c);
  const bool ok = r.mean.mcc >= 0.28 && r.mean.auc >= 0.69 && r.mean.mcc < single.mean.mcc;
  std::printf("%s criterion 2: OTC task multi MCC %.4f (>= 0.28, < single %.4f), AUC %.3f (>= 0.69)\n", verdict(ok),
              r.mean.mcc, single.mean.mcc, r.mean.auc);
  return ok;
}

bool criterion3(Runner& run) {
  bool ok = true;
  for (auto& d : run.data_) {
    std::map<std::string, double> mcc;
    for (const char* v : {"full", "decay", "mean", "trustor"}) {
      cli::RunConfig c = d.config;
      c.variant = v;
      mcc[v] = run.report(d, std::string("single/") + v, c).mean.mcc;
    }
    const bool here = mcc["full"] >= mcc["decay"] && mcc["decay"] >= mcc["mean"] && mcc["full"] > mcc["trustor"] &&
                      mcc["full"] - mcc["mean"] >= 0.01;
    std::printf("%s criterion 3 (%s): MCC full %.3f, decay %.3f, mean %.3f, trustor %.3f (full >= decay >= mean, "
                "full - mean >= 0.01, full > trustor)\n",
                verdict(here), d.name.c_str(), mcc["full"], mcc["decay"], mcc["mean"], mcc["trustor"]);
    ok = ok && here;
  }
  return ok;
}

cli::RunConfig attacked(const Dataset& d, const std::string& kind, bool defense) {
  cli::RunConfig c = d.config;
  c.attack = kind;
  c.attack_fraction = 0.1;
  c.poison = true;
  c.defense = defense;
  return c;
}

bool criterion4(Runner& run) {
  bool ok = true;
  for (auto& d : run.data_) {
    const auto& on = run.report(d, "bad/on", attacked(d, "bad", true));
    const auto& off = run.report(d, "bad/off", attacked(d, "bad", false));
    const auto a = on.seed_mcc(), b = off.seed_mcc();
    std::size_t positive = 0;
    for (std::size_t s = 0; s < a.size(); ++s) positive += a[s] > b[s];
    const bool here = on.mean.mcc > off.mean.mcc && positive >= 4 && on.split_hash() == off.split_hash();
    std::printf("%s criterion 4 (%s): bad-mouthing MCC defense on %.3f vs off %.3f, %zu/%zu seeds positive (>= 4)\n",
                verdict(here), d.name.c_str(), on.mean.mcc, off.mean.mcc, positive, a.size());
    ok = ok && here;
  }
  return ok;
}

bool criterion5(Runner& run) {
  bool ok = true;
  for (auto& d : run.data_) {
    for (const char* kind : {"bad", "good"}) {
      const std::string k = kind;
      const auto& on = run.report(d, k + "/on", attacked(d, k, true));
      const auto& off = run.report(d, k + "/off", attacked(d, k, false));
      double shift = 0.0;
      const bool have = on.coefficients && off.coefficients && off.coefficients->malicious_count > 0 &&
                        off.coefficients->malicious_mean > 0;
      if (have) shift = (off.coefficients->malicious_mean - on.coefficients->malicious_mean) /
                        off.coefficients->malicious_mean;
      const bool here = have && shift >= 0.20;
      std::printf("%s criterion 5 (%s, %s-mouthing): malicious coefficient %.4f -> %.4f, reduction %.1f%% (>= 20%%)\n",
                  verdict(here), d.name.c_str(), kind, have ? off.coefficients->malicious_mean : 0.0,
                  have ? on.coefficients->malicious_mean : 0.0, 100.0 * shift);
      ok = ok && here;
    }
  }
  return ok;
}

bool criterion6(Runner& run) {
  const std::map<std::string, double> expected{{"otc", 0.90}, {"alpha", 0.94}};
  bool ok = true;
  for (auto& d : run.data_) {
    const auto labels = label_nodes(d.graph.edges, d.graph.scheme);
    const double ratio = edge_homophily_ratio(d.graph.edges, labels);
    const double want = expected.at(d.name);
    const bool here = std::abs(ratio - want) <= 0.03;
    std::printf("%s criterion 6 (%s): edge homophily ratio %.4f (%.2f ± 0.03)\n", verdict(here), d.name.c_str(),
                ratio, want);
    ok = ok && here;
  }
  return ok;
}

bool criterion7(Runner& run) {
  const auto& time = run.report(run.otc(), "single", run.otc().config);
  cli::RunConfig c = run.otc().config;
  c.segmentation = "event";
  const auto& event = run.report(run.otc(), "single/event", c);
  const bool ok = time.mean.mcc >= event.mean.mcc && time.split_hash() == event.split_hash();
  std::printf("%s criterion 7: OTC time-driven MCC %.3f >= event-driven %.3f on identical splits\n", verdict(ok),
              time.mean.mcc, event.mean.mcc);
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  set_log_level(LogLevel::Warn);
  const char* env = std::getenv("TRUSTGUARD_DATA_DIR");
  const fs::path dir = env && *env ? fs::path(env) : fs::path(TRUSTGUARD_SOURCE_DIR) / "data";
  const std::vector<std::pair<std::string, std::string>> files{{"otc", "soc-sign-bitcoinotc.csv"},
                                                                {"alpha", "soc-sign-bitcoinalpha.csv"}};
  for (const auto& [name, file] : files) {
    if (!fs::exists(dir / file)) {
      std::printf("SKIP criteria 1-7: %s not found in %s\n", file.c_str(), dir.string().c_str());
      return kSkip;
    }
  }
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
  if (wanted.empty()) wanted = {1, 2, 3, 4, 5, 6, 7};

  try {
    std::vector<Dataset> data;
    for (const auto& [name, file] : files) {
      Dataset d;
      d.name = name;
      d.path = dir / file;
      d.graph = load_edge_list(d.path, TrustLevelScheme::by_name("bitcoin"));
      d.config.dataset = d.path.string();
      data.push_back(std::move(d));
    }
    Runner run(data);
    bool (*const criteria[])(Runner&) = {criterion1, criterion2, criterion3, criterion4,
                                         criterion5, criterion6, criterion7};
    bool ok = true;
    for (int c : wanted) {
      if (c < 1 || c > 7) continue;
      ok = criteria[c - 1](run) && ok;
    }
    return ok ? 0 : 1;
  } catch (const std::exception& e) {
    std::printf("FAIL: %s\n", e.what());
    return 1;
  }
}
