#include "trustguard/explain.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <ostream>
#include <set>
#include <tuple>
#include <unordered_map>

#include "trustguard/error.hpp"

namespace trustguard {

namespace {

using EdgeKey = std::tuple<NodeId, NodeId, Level, double>;
EdgeKey key(const TrustEdge& e) { return {e.source, e.target, e.level, e.timestamp}; }

constexpr std::size_t kFar = std::numeric_limits<std::size_t>::max() / 4;

std::unordered_map<NodeId, std::size_t> bfs(const std::unordered_map<NodeId, std::vector<NodeId>>& adj,
                                            NodeId start, std::size_t limit) {
  std::unordered_map<NodeId, std::size_t> dist{{start, 0}};
  std::deque<NodeId> queue{start};
  while (!queue.empty()) {
    const NodeId u = queue.front();
    queue.pop_front();
    if (dist[u] >= limit) continue;
    auto it = adj.find(u);
    if (it == adj.end()) continue;
    for (NodeId v : it->second) {
      if (dist.contains(v)) continue;
      dist[v] = dist[u] + 1;
      queue.push_back(v);
    }
  }
  return dist;
}

std::size_t lookup(const std::unordered_map<NodeId, std::size_t>& d, NodeId n) {
  auto it = d.find(n);
  return it == d.end() ? kFar : it->second;
}

// Layer-averaged trustee coefficient of edge e in plan p; 0 if the branch is off.
double trustee_coefficient(const SpatialTrace& trace, std::size_t e) {
  const auto& layers = trace.coefficients;
  double c = 0.0;
  std::size_t used = 0;
  for (const auto& l : layers) {
    const auto& v = l[static_cast<std::size_t>(Role::Trustee)];
    if (e < v.size()) {
      c += v[e];
      ++used;
    }
  }
  return used ? c / static_cast<double>(used) : 0.0;
}

std::vector<double> fixed_weights(const TemporalConfig& cfg, std::size_t n) {
  if (cfg.mode == TemporalMode::Decay) return decay_weights(n, cfg.decay_tau);
  return std::vector<double>(n, 1.0 / static_cast<double>(n));
}

}  // namespace

ExplanationBundle export_explanations(const TrainResult& trained, const InjectionReport* injection,
                                      std::optional<std::pair<NodeId, NodeId>> query,
                                      std::optional<std::size_t> hops) {
  const auto& plans = trained.plans;
  if (trained.coefficients.size() != plans.size()) {
    fail(ErrorKind::State, "explanations need the final-pass traces of every snapshot");
  }
  std::set<EdgeKey> malicious;
  if (injection) {
    for (const auto& e : injection->edges)
      if (e.malicious) malicious.insert(key(e.edge));
  }
  ExplanationBundle b;
  double mal = 0.0, ben = 0.0;
  for (std::size_t p = 0; p < plans.size(); ++p) {
    const auto& trace = trained.coefficients[p];
    for (std::size_t l = 0; l < trace.coefficients.size(); ++l) {
      for (Role role : {Role::Trustee, Role::Trustor}) {
        const auto& v = trace.coefficients[l][static_cast<std::size_t>(role)];
        for (std::size_t e = 0; e < v.size(); ++e) {
          b.coefficients.push_back({p, l, role, plans[p].edges[e], v[e], malicious.contains(key(plans[p].edges[e]))});
        }
      }
    }
    if (trace.coefficients.empty() || trace.coefficients[0][0].empty()) continue;
    for (std::size_t e = 0; e < plans[p].edges.size(); ++e) {
      const double c = trustee_coefficient(trace, e);
      if (malicious.contains(key(plans[p].edges[e]))) {
        mal += c;
        ++b.malicious_count;
      } else {
        ben += c;
        ++b.benign_count;
      }
    }
  }
  if (b.malicious_count) b.malicious_mean = mal / static_cast<double>(b.malicious_count);
  if (b.benign_count) b.benign_mean = ben / static_cast<double>(b.benign_count);

  // Attention trend over nodes seen in any training snapshot.
  std::vector<NodeId> observed;
  for (const auto& plan : plans) observed.insert(observed.end(), plan.active.begin(), plan.active.end());
  std::sort(observed.begin(), observed.end());
  observed.erase(std::unique(observed.begin(), observed.end()), observed.end());
  const auto& rec = trained.attention;
  const std::size_t n = plans.size();
  const auto fixed = fixed_weights(trained.model.config.temporal, n);
  auto attention_of = [&](NodeId node, std::size_t t) {
    if (rec.heads.empty()) return fixed[t];
    double s = 0.0;
    for (std::size_t h = 0; h < rec.heads.size(); ++h) s += rec.score(h, node, t);
    return s / static_cast<double>(rec.heads.size());
  };
  for (std::size_t t = 0; t < n; ++t) {
    double s = 0.0;
    for (NodeId u : observed) s += attention_of(u, t);
    b.attention.push_back({t, observed.empty() ? 0.0 : s / static_cast<double>(observed.size()),
                           plans[t].edges.size()});
  }

  if (query) {
    const auto [u, v] = *query;
    const std::size_t limit = hops.value_or(trained.model.config.spatial.layer_count());
    std::unordered_map<NodeId, std::vector<NodeId>> adj;
    for (const auto& plan : plans) {
      for (const auto& e : plan.edges) {
        adj[e.source].push_back(e.target);
        adj[e.target].push_back(e.source);
      }
    }
    const auto du = bfs(adj, u, limit), dv = bfs(adj, v, limit);
    if (u != v && lookup(du, v) <= limit) {
      for (std::size_t p = 0; p < plans.size(); ++p) {
        for (std::size_t e = 0; e < plans[p].edges.size(); ++e) {
          const auto& edge = plans[p].edges[e];
          const std::size_t fwd = lookup(du, edge.source) + 1 + lookup(dv, edge.target);
          const std::size_t back = lookup(du, edge.target) + 1 + lookup(dv, edge.source);
          if (std::min(fwd, back) > limit) continue;
          b.path.push_back({p, edge, trustee_coefficient(trained.coefficients[p], e), attention_of(edge.target, p)});
        }
      }
    }
  }
  return b;
}

void write_coefficient_records(std::ostream& out, const ExplanationBundle& b) {
  out << "snapshot,layer,role,source,target,level,coefficient,malicious\n";
  out.precision(10);
  for (const auto& r : b.coefficients) {
    out << r.snapshot << ',' << r.layer << ',' << (r.role == Role::Trustee ? "trustee" : "trustor") << ','
        << r.edge.source << ',' << r.edge.target << ',' << r.edge.level << ',' << r.coefficient << ','
        << (r.malicious ? 1 : 0) << '\n';
  }
}

void write_attention_trend(std::ostream& out, const ExplanationBundle& b) {
  out << "timeslot,mean_attention,interactions\n";
  out.precision(10);
  for (const auto& a : b.attention) out << a.timeslot << ',' << a.mean_attention << ',' << a.interactions << '\n';
}

void write_path(std::ostream& out, const ExplanationBundle& b) {
  out << "snapshot,source,target,level,coefficient,attention\n";
  out.precision(10);
  for (const auto& s : b.path) {
    out << s.snapshot << ',' << s.edge.source << ',' << s.edge.target << ',' << s.edge.level << ','
        << s.coefficient << ',' << s.attention << '\n';
  }
}

}  // namespace trustguard
