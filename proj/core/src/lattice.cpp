#include "gccsolver/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>

#include "gccsolver/errors.hpp"

namespace gccsolver {

struct EventTree::Data {
  std::size_t dim = 0;
  double horizon = 1.0;
  int steps = 0;
  bool recombining = false;

  std::vector<int> time;
  std::vector<EdgeId> child_begin;  // size n + 1
  std::vector<NodeId> edge_child;
  std::vector<double> edge_prob;
  std::vector<double> edge_increment;  // edge_count * dim
  std::vector<std::uint32_t> parent_begin;  // size n + 1
  std::vector<NodeId> parent_list;
  std::vector<EdgeId> in_edge;
  std::vector<NodeId> order;
  std::vector<std::uint32_t> level_begin;  // steps + 2
  std::vector<NodeId> terminals;
  std::vector<std::uint32_t> terminal_rank;
};

std::size_t EventTree::size() const noexcept { return data_->time.size(); }
std::size_t EventTree::edge_count() const noexcept { return data_->edge_child.size(); }
std::size_t EventTree::dim() const noexcept { return data_->dim; }
int EventTree::steps() const noexcept { return data_->steps; }
double EventTree::horizon() const noexcept { return data_->horizon; }
bool EventTree::recombining() const noexcept { return data_->recombining; }
int EventTree::time_index(NodeId v) const { return data_->time[v]; }

std::size_t EventTree::branch_count(NodeId v) const {
  return data_->child_begin[v + 1] - data_->child_begin[v];
}

EdgeId EventTree::first_edge(NodeId v) const { return data_->child_begin[v]; }

std::span<const NodeId> EventTree::children(NodeId v) const {
  return {data_->edge_child.data() + data_->child_begin[v], branch_count(v)};
}

std::span<const double> EventTree::probs(NodeId v) const {
  return {data_->edge_prob.data() + data_->child_begin[v], branch_count(v)};
}

std::span<const double> EventTree::increments(NodeId v) const {
  return {data_->edge_increment.data() + std::size_t{data_->child_begin[v]} * data_->dim,
          branch_count(v) * data_->dim};
}

std::span<const double> EventTree::edge_increment(EdgeId e) const {
  return {data_->edge_increment.data() + std::size_t{e} * data_->dim, data_->dim};
}

std::span<const double> EventTree::edge_probs() const noexcept { return data_->edge_prob; }

std::span<const NodeId> EventTree::parents(NodeId v) const {
  return {data_->parent_list.data() + data_->parent_begin[v],
          data_->parent_begin[v + 1] - data_->parent_begin[v]};
}

NodeId EventTree::parent(NodeId v) const {
  auto p = parents(v);
  return p.empty() ? kNoNode : p.front();
}

EdgeId EventTree::in_edge(NodeId v) const { return data_->in_edge[v]; }
std::span<const NodeId> EventTree::order() const noexcept { return data_->order; }

std::span<const NodeId> EventTree::level(int t) const {
  if (t < 0 || t > data_->steps) return {};
  return {data_->order.data() + data_->level_begin[t],
          data_->level_begin[t + 1] - data_->level_begin[t]};
}

std::span<const NodeId> EventTree::terminals() const noexcept { return data_->terminals; }
std::uint32_t EventTree::terminal_rank(NodeId v) const { return data_->terminal_rank[v]; }

std::vector<NodeId> EventTree::path_to(NodeId v) const {
  if (recombining()) throw ContractViolation("path_to: paths are not unique on a recombining lattice");
  std::vector<NodeId> path;
  for (NodeId u = v; u != kNoNode; u = parent(u)) path.push_back(u);
  std::reverse(path.begin(), path.end());
  return path;
}

// ---------------------------------------------------------------------------

struct EventTree::Builder::Pending {
  std::size_t dim;
  double horizon;
  std::vector<int> time;
  struct Branch {
    NodeId parent;
    NodeId child;
    double prob;
    std::vector<double> increment;
  };
  std::vector<Branch> branches;
};

EventTree::Builder::Builder(std::size_t dim, double horizon_years)
    : pending_(std::make_unique<Pending>(Pending{dim, horizon_years, {}, {}})) {}
EventTree::Builder::~Builder() = default;
EventTree::Builder::Builder(Builder&&) noexcept = default;
EventTree::Builder& EventTree::Builder::operator=(Builder&&) noexcept = default;

NodeId EventTree::Builder::add_node(int time_index) {
  pending_->time.push_back(time_index);
  return static_cast<NodeId>(pending_->time.size() - 1);
}

void EventTree::Builder::add_branch(NodeId parent, NodeId child, double prob,
                                    std::span<const double> increment) {
  if (increment.size() != pending_->dim) {
    throw ModelError("branch " + std::to_string(parent) + "->" + std::to_string(child) + " has " +
                     std::to_string(increment.size()) + " increments, expected " +
                     std::to_string(pending_->dim));
  }
  pending_->branches.push_back({parent, child, prob, {increment.begin(), increment.end()}});
}

EventTree EventTree::Builder::build() && {
  auto& p = *pending_;
  const std::size_t n = p.time.size();
  if (n == 0) throw ModelError("tree has no nodes");
  if (!(p.horizon > 0.0) || !std::isfinite(p.horizon)) throw ModelError("horizon must be positive");
  if (p.time[0] != 0) throw ModelError("node 0 must be the root at time index 0");

  auto d = std::make_shared<Data>();
  d->dim = p.dim;
  d->horizon = p.horizon;
  d->time = p.time;

  std::vector<std::uint32_t> out_degree(n, 0), in_degree(n, 0);
  for (const auto& b : p.branches) {
    if (b.parent >= n || b.child >= n) throw ModelError("branch references an unknown node id");
    if (p.time[b.child] != p.time[b.parent] + 1) {
      throw ModelError("node " + std::to_string(b.child) + " at time " + std::to_string(p.time[b.child]) +
                       " is a child of node " + std::to_string(b.parent) + " at time " +
                       std::to_string(p.time[b.parent]));
    }
    ++out_degree[b.parent];
    ++in_degree[b.child];
  }
  for (NodeId v = 1; v < n; ++v) {
    if (in_degree[v] == 0) throw ModelError("node " + std::to_string(v) + " has no parent");
  }
  if (in_degree[0] != 0) throw ModelError("root has a parent");
  d->recombining = std::any_of(in_degree.begin(), in_degree.end(), [](auto k) { return k > 1; });

  // Stable sort keeps each parent's branches in insertion order.
  std::vector<std::size_t> by_parent(p.branches.size());
  std::iota(by_parent.begin(), by_parent.end(), 0);
  std::stable_sort(by_parent.begin(), by_parent.end(),
                   [&](std::size_t a, std::size_t b) { return p.branches[a].parent < p.branches[b].parent; });

  d->child_begin.assign(n + 1, 0);
  for (NodeId v = 0; v < n; ++v) d->child_begin[v + 1] = d->child_begin[v] + out_degree[v];
  d->edge_child.resize(p.branches.size());
  d->edge_prob.resize(p.branches.size());
  d->edge_increment.resize(p.branches.size() * p.dim);
  d->in_edge.assign(n, kNoNode);
  for (std::size_t e = 0; e < by_parent.size(); ++e) {
    const auto& b = p.branches[by_parent[e]];
    d->edge_child[e] = b.child;
    d->edge_prob[e] = b.prob;
    std::copy(b.increment.begin(), b.increment.end(), d->edge_increment.begin() + e * p.dim);
    if (d->in_edge[b.child] == kNoNode) d->in_edge[b.child] = static_cast<EdgeId>(e);
  }

  d->parent_begin.assign(n + 1, 0);
  for (NodeId v = 0; v < n; ++v) d->parent_begin[v + 1] = d->parent_begin[v] + in_degree[v];
  d->parent_list.resize(d->parent_begin[n]);
  std::vector<std::uint32_t> fill(n, 0);
  for (std::size_t e = 0; e < d->edge_child.size(); ++e) {
    const NodeId c = d->edge_child[e];
    d->parent_list[d->parent_begin[c] + fill[c]++] = p.branches[by_parent[e]].parent;
  }

  d->steps = *std::max_element(p.time.begin(), p.time.end());
  if (d->steps < 1) throw ModelError("tree needs at least one time step");
  d->order.resize(n);
  std::iota(d->order.begin(), d->order.end(), 0);
  std::stable_sort(d->order.begin(), d->order.end(), [&](NodeId a, NodeId b) { return p.time[a] < p.time[b]; });
  d->level_begin.assign(static_cast<std::size_t>(d->steps) + 2, 0);
  for (NodeId v = 0; v < n; ++v) {
    if (p.time[v] < 0) throw ModelError("negative time index at node " + std::to_string(v));
    ++d->level_begin[static_cast<std::size_t>(p.time[v]) + 1];
  }
  for (std::size_t t = 1; t < d->level_begin.size(); ++t) d->level_begin[t] += d->level_begin[t - 1];

  d->terminal_rank.assign(n, kNoNode);
  for (NodeId v = 0; v < n; ++v) {
    if (out_degree[v] == 0) {
      d->terminal_rank[v] = static_cast<std::uint32_t>(d->terminals.size());
      d->terminals.push_back(v);
    }
  }
  return EventTree(std::move(d));
}

void require_same_tree(const EventTree& a, const EventTree& b, const char* what) {
  if (!a.same_as(b)) throw ContractViolation(std::string(what) + ": operands live on different trees");
}

// ---------------------------------------------------------------------------

namespace {

void require_finite(std::span<const double> values, const char* what) {
  for (double x : values) {
    if (!std::isfinite(x)) throw ContractViolation(std::string(what) + ": non-finite value");
  }
}

double sup_abs_of(std::span<const double> values) {
  double s = 0.0;
  for (double x : values) s = std::max(s, std::abs(x));
  return s;
}

}  // namespace

AdaptedProcess::AdaptedProcess(EventTree tree, std::vector<double> values)
    : tree_(std::move(tree)), values_(std::move(values)) {
  if (values_.size() != tree_.size()) {
    throw ContractViolation("AdaptedProcess: expected " + std::to_string(tree_.size()) + " values, got " +
                            std::to_string(values_.size()));
  }
  require_finite(values_, "AdaptedProcess");
}

AdaptedProcess AdaptedProcess::constant(const EventTree& tree, double value) {
  return AdaptedProcess(tree, std::vector<double>(tree.size(), value));
}

AdaptedProcess AdaptedProcess::from_function(const EventTree& tree, const std::function<double(NodeId)>& f) {
  std::vector<double> values(tree.size());
  for (NodeId v = 0; v < tree.size(); ++v) values[v] = f(v);
  return AdaptedProcess(tree, std::move(values));
}

double AdaptedProcess::sup_abs() const { return sup_abs_of(values_); }
double AdaptedProcess::min() const { return *std::min_element(values_.begin(), values_.end()); }
double AdaptedProcess::max() const { return *std::max_element(values_.begin(), values_.end()); }

TerminalClaim::TerminalClaim(EventTree tree, std::vector<double> values)
    : tree_(std::move(tree)), values_(std::move(values)) {
  if (values_.size() != tree_.terminals().size()) {
    throw ContractViolation("TerminalClaim: expected " + std::to_string(tree_.terminals().size()) +
                            " values, got " + std::to_string(values_.size()));
  }
  require_finite(values_, "TerminalClaim");
}

TerminalClaim TerminalClaim::constant(const EventTree& tree, double value) {
  return TerminalClaim(tree, std::vector<double>(tree.terminals().size(), value));
}

TerminalClaim TerminalClaim::from_function(const EventTree& tree, const std::function<double(NodeId)>& f) {
  std::vector<double> values;
  values.reserve(tree.terminals().size());
  for (NodeId v : tree.terminals()) values.push_back(f(v));
  return TerminalClaim(tree, std::move(values));
}

TerminalClaim TerminalClaim::from_process(const AdaptedProcess& p) {
  return from_function(p.tree(), [&](NodeId v) { return p[v]; });
}

double TerminalClaim::at(NodeId terminal) const {
  const auto rank = tree_.terminal_rank(terminal);
  if (rank == kNoNode) throw ContractViolation("TerminalClaim::at: node is not terminal");
  return values_[rank];
}

double TerminalClaim::sup_abs() const { return sup_abs_of(values_); }

TerminalClaim TerminalClaim::operator+(const TerminalClaim& other) const {
  require_same_tree(tree_, other.tree_, "TerminalClaim::operator+");
  std::vector<double> out(values_.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = values_[i] + other.values_[i];
  return TerminalClaim(tree_, std::move(out));
}

TerminalClaim TerminalClaim::operator-() const { return *this * -1.0; }

TerminalClaim TerminalClaim::operator*(double s) const {
  std::vector<double> out(values_);
  for (double& x : out) x *= s;
  return TerminalClaim(tree_, std::move(out));
}

TerminalClaim TerminalClaim::operator+(double c) const {
  std::vector<double> out(values_);
  for (double& x : out) x += c;
  return TerminalClaim(tree_, std::move(out));
}

// ---------------------------------------------------------------------------

StoppingRule::StoppingRule(EventTree tree, std::vector<std::uint8_t> marks)
    : tree_(std::move(tree)), marks_(std::move(marks)) {
  if (marks_.size() != tree_.size()) throw ContractViolation("StoppingRule: marking size mismatch");
  for (auto& m : marks_) m = m ? 1 : 0;
  for (NodeId v : tree_.terminals()) marks_[v] = 1;
}

StoppingRule StoppingRule::at_maturity(const EventTree& tree) {
  return StoppingRule(tree, std::vector<std::uint8_t>(tree.size(), 0));
}

StoppingRule StoppingRule::immediate(const EventTree& tree) {
  std::vector<std::uint8_t> marks(tree.size(), 0);
  marks[tree.root()] = 1;
  return StoppingRule(tree, std::move(marks));
}

StoppingRule StoppingRule::from_nodes(const EventTree& tree, std::span<const NodeId> nodes) {
  std::vector<std::uint8_t> marks(tree.size(), 0);
  for (NodeId v : nodes) {
    if (v >= tree.size()) throw ModelError("stopping rule references unknown node " + std::to_string(v));
    marks[v] = 1;
  }
  return StoppingRule(tree, std::move(marks));
}

StoppingRule StoppingRule::closure() const {
  const auto profile = stop_profile(*this);
  std::vector<std::uint8_t> marks(tree_.size());
  for (NodeId v = 0; v < tree_.size(); ++v) marks[v] = profile.status[v] != StopStatus::kLive;
  return StoppingRule(tree_, std::move(marks));
}

std::vector<NodeId> StoppingRule::first_stop_nodes() const {
  const auto profile = stop_profile(*this);
  std::vector<NodeId> out;
  for (NodeId v = 0; v < tree_.size(); ++v) {
    if (profile.status[v] == StopStatus::kStopsHere && !tree_.is_terminal(v)) out.push_back(v);
  }
  return out;
}

std::uint64_t StoppingRule::hash() const {
  // FNV-1a over the ids of the first-stop nodes
  std::uint64_t h = 1469598103934665603ULL;
  for (NodeId v : first_stop_nodes()) {
    for (int byte = 0; byte < 4; ++byte) {
      h ^= (v >> (8 * byte)) & 0xFFu;
      h *= 1099511628211ULL;
    }
  }
  return h;
}

bool operator==(const StoppingRule& a, const StoppingRule& b) {
  return a.tree_.same_as(b.tree_) && a.marks_ == b.marks_;
}

bool same_stopping_time(const StoppingRule& a, const StoppingRule& b) {
  require_same_tree(a.tree(), b.tree(), "same_stopping_time");
  return a.closure() == b.closure();
}

namespace {

StopProfile stop_profile_impl(const StoppingRule& rule, const AdaptedProcess* carried) {
  const EventTree& tree = rule.tree();
  if (carried) require_same_tree(tree, carried->tree(), "stop_profile");
  const std::size_t n = tree.size();
  StopProfile out;
  out.status.assign(n, StopStatus::kLive);
  out.frozen.assign(n, std::numeric_limits<double>::quiet_NaN());
  out.stop_node.assign(n, kNoNode);

  for (NodeId v : tree.order()) {
    const auto parents = tree.parents(v);
    bool before = false;
    NodeId origin = kNoNode;
    double frozen = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < parents.size(); ++i) {
      const NodeId p = parents[i];
      const bool p_stopped = out.status[p] != StopStatus::kLive;
      if (i == 0) {
        before = p_stopped;
        origin = out.stop_node[p];
        frozen = out.frozen[p];
        continue;
      }
      if (p_stopped != before) {
        throw PathDependenceError("stopping rule is path-dependent at lattice node " + std::to_string(v) +
                                  "; use a full event tree");
      }
      if (before && carried && out.frozen[p] != frozen) {
        throw PathDependenceError("frozen payoff is path-dependent at lattice node " + std::to_string(v) +
                                  "; use a full event tree");
      }
    }
    if (before) {
      out.status[v] = StopStatus::kStoppedBefore;
      out.stop_node[v] = origin;
      out.frozen[v] = frozen;
    } else if (rule.marked(v)) {
      out.status[v] = StopStatus::kStopsHere;
      out.stop_node[v] = v;
      if (carried) out.frozen[v] = (*carried)[v];
    }
  }
  return out;
}

}  // namespace

StopProfile stop_profile(const StoppingRule& rule, const AdaptedProcess& carried) {
  return stop_profile_impl(rule, &carried);
}

StopProfile stop_profile(const StoppingRule& rule) { return stop_profile_impl(rule, nullptr); }

std::vector<int> induced_times(const StoppingRule& rule) {
  const EventTree& tree = rule.tree();
  if (tree.recombining()) throw ContractViolation("induced_times requires a full event tree");
  const auto profile = stop_profile(rule);
  std::vector<int> out;
  out.reserve(tree.terminals().size());
  for (NodeId leaf : tree.terminals()) out.push_back(tree.time_index(profile.stop_node[leaf]));
  return out;
}

bool stops_no_later(const StoppingRule& a, const StoppingRule& b) {
  require_same_tree(a.tree(), b.tree(), "stops_no_later");
  const auto pa = stop_profile(a);
  const auto pb = stop_profile(b);
  for (NodeId v = 0; v < a.tree().size(); ++v) {
    if (pb.status[v] != StopStatus::kLive && pa.status[v] == StopStatus::kLive) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

TradingStrategy::TradingStrategy(EventTree tree, std::vector<double> holdings)
    : tree_(std::move(tree)), holdings_(std::move(holdings)) {
  if (holdings_.size() != tree_.size() * tree_.dim()) throw ContractViolation("TradingStrategy: size mismatch");
  require_finite(holdings_, "TradingStrategy");
}

TradingStrategy TradingStrategy::zero(const EventTree& tree) {
  return TradingStrategy(tree, std::vector<double>(tree.size() * tree.dim(), 0.0));
}

std::span<const double> TradingStrategy::holding(NodeId v) const {
  return {holdings_.data() + std::size_t{v} * tree_.dim(), tree_.dim()};
}

TerminalClaim trading_gains(const TradingStrategy& strategy, int from_time) {
  const EventTree& tree = strategy.tree();
  if (tree.recombining()) throw ContractViolation("trading_gains requires a full event tree");
  std::vector<double> acc(tree.size(), 0.0);
  for (NodeId v : tree.order()) {
    if (v == tree.root()) continue;
    const NodeId p = tree.parent(v);
    double g = acc[p];
    if (tree.time_index(p) >= from_time) {
      const auto inc = tree.edge_increment(tree.in_edge(v));
      const auto hold = strategy.holding(p);
      for (std::size_t j = 0; j < tree.dim(); ++j) g += hold[j] * inc[j];
    }
    acc[v] = g;
  }
  return TerminalClaim::from_function(tree, [&](NodeId v) { return acc[v]; });
}

// ---------------------------------------------------------------------------

namespace {

void check_steps(int steps, double horizon) {
  if (steps < 1) throw ModelError("steps must be >= 1");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ModelError("horizon must be positive");
}

}  // namespace

BinomialModel build_binomial(int steps, double horizon_years, double drift, double vol, bool traded,
                             Layout layout) {
  check_steps(steps, horizon_years);
  if (!(vol > 0.0) || !std::isfinite(vol)) throw ModelError("vol must be positive");
  if (!std::isfinite(drift)) throw ModelError("drift must be finite");
  if (layout == Layout::kFullTree && steps > 24) {
    throw ModelError("full binomial tree with " + std::to_string(steps) +
                     " steps is too large; use the recombining layout");
  }
  const double dt = horizon_years / steps;
  const double h = vol * std::sqrt(dt);
  const std::size_t dim = traded ? 1 : 0;
  const std::array<double, 1> up{h}, down{-h};
  const auto inc = [&](bool is_up) { return std::span<const double>(is_up ? up : down).first(dim); };

  EventTree::Builder b(dim, horizon_years);
  std::vector<double> w;
  if (layout == Layout::kFullTree) {
    const std::size_t n = (std::size_t{1} << (steps + 1)) - 1;
    w.assign(n, 0.0);
    for (std::size_t v = 0; v < n; ++v) {
      int t = 0;
      for (std::size_t k = v + 1; k > 1; k >>= 1) ++t;
      b.add_node(t);
    }
    for (std::size_t v = 0; 2 * v + 2 < n; ++v) {
      const NodeId up_child = static_cast<NodeId>(2 * v + 1), down_child = static_cast<NodeId>(2 * v + 2);
      b.add_branch(static_cast<NodeId>(v), up_child, 0.5, inc(true));
      b.add_branch(static_cast<NodeId>(v), down_child, 0.5, inc(false));
      w[up_child] = w[v] + h;
      w[down_child] = w[v] - h;
    }
  } else {
    // node (t, j) with j up-moves has id t(t+1)/2 + j
    const auto id = [](int t, int j) { return static_cast<NodeId>(t * (t + 1) / 2 + j); };
    for (int t = 0; t <= steps; ++t) {
      for (int j = 0; j <= t; ++j) {
        b.add_node(t);
        w.push_back((2.0 * j - t) * h);
      }
    }
    for (int t = 0; t < steps; ++t) {
      for (int j = 0; j <= t; ++j) {
        b.add_branch(id(t, j), id(t + 1, j + 1), 0.5, inc(true));
        b.add_branch(id(t, j), id(t + 1, j), 0.5, inc(false));
      }
    }
  }
  EventTree tree = std::move(b).build();
  require_valid(tree);
  AdaptedProcess W(tree, w);
  for (NodeId v = 0; v < tree.size(); ++v) w[v] += drift * tree.time(v);
  AdaptedProcess drifted(tree, std::move(w));
  return {tree, std::move(W), std::move(drifted)};
}

TrinomialModel build_trinomial(int steps, double horizon_years, const std::array<double, 3>& probs,
                               const std::array<double, 3>& traded_increments,
                               const std::array<double, 3>& untraded_increments) {
  check_steps(steps, horizon_years);
  if (steps > 13) throw ModelError("full trinomial tree with more than 13 steps is too large");
  if (!zero_in_relative_interior(traded_increments, 3, 1)) {
    throw ModelError("trinomial pattern admits one-step arbitrage: 0 is not inside the hull of the traded increments");
  }
  std::size_t n = 0;
  for (int t = 0, width = 1; t <= steps; ++t, width *= 3) n += static_cast<std::size_t>(width);

  EventTree::Builder b(1, horizon_years);
  std::vector<double> s(n, 0.0), u(n, 0.0);
  for (std::size_t v = 0, t = 0, width = 1, next = 1; v < n; ++v) {
    if (v == next) {
      ++t;
      width *= 3;
      next += width;
    }
    b.add_node(static_cast<int>(t));
  }
  for (std::size_t v = 0; 3 * v + 3 < n; ++v) {
    for (std::size_t i = 0; i < 3; ++i) {
      const NodeId c = static_cast<NodeId>(3 * v + 1 + i);
      const std::array<double, 1> inc{traded_increments[i]};
      b.add_branch(static_cast<NodeId>(v), c, probs[i], inc);
      s[c] = s[v] + traded_increments[i];
      u[c] = u[v] + untraded_increments[i];
    }
  }
  EventTree tree = std::move(b).build();
  require_valid(tree);
  return {tree, AdaptedProcess(tree, std::move(s)), AdaptedProcess(tree, std::move(u))};
}

TrinomialModel build_incomplete_trinomial(int steps, double horizon_years, double traded_vol,
                                          double untraded_vol, CorrelationPattern pattern) {
  check_steps(steps, horizon_years);
  if (!(traded_vol > 0.0) || !(untraded_vol > 0.0)) throw ModelError("vols must be positive");
  const double root_dt = std::sqrt(horizon_years / steps);
  const double a = traded_vol * root_dt;
  const double c = untraded_vol * root_dt;
  // unit-variance directions under the uniform law on three branches
  const double k = std::sqrt(1.5);
  const std::array<double, 3> level{k, 0.0, -k};
  const std::array<double, 3> curve{1.0 / std::sqrt(2.0), -2.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)};

  std::array<double, 3> probs{1.0 / 3, 1.0 / 3, 1.0 / 3};
  std::array<double, 3> ds{}, du{};
  switch (pattern) {
    case CorrelationPattern::kOrthogonal:
      for (int i = 0; i < 3; ++i) {
        ds[i] = a * level[i];
        du[i] = c * curve[i];
      }
      break;
    case CorrelationPattern::kPartial:
      for (int i = 0; i < 3; ++i) {
        ds[i] = a * level[i];
        du[i] = c * (level[i] + curve[i]) / std::sqrt(2.0);
      }
      break;
    case CorrelationPattern::kSkewed:
      probs = {0.5, 0.3, 0.2};
      ds = {a, 0.25 * a, -1.5 * a};
      du = {0.5 * c, -1.5 * c, c};
      break;
  }
  return build_trinomial(steps, horizon_years, probs, ds, du);
}

// ---------------------------------------------------------------------------

namespace {

// Lawson-Hanson non-negative least squares: min ||A x - b||, x >= 0.
Eigen::VectorXd nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  const Eigen::Index n = A.cols();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  const double tol = 1e-12 * std::max(1.0, A.cwiseAbs().maxCoeff()) * std::max(1.0, b.cwiseAbs().maxCoeff());

  for (int outer = 0; outer < 3 * n + 10; ++outer) {
    Eigen::VectorXd w = A.transpose() * (b - A * x);
    Eigen::Index best = -1;
    double best_w = tol;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!passive[static_cast<std::size_t>(j)] && w(j) > best_w) {
        best_w = w(j);
        best = j;
      }
    }
    if (best < 0) break;
    passive[static_cast<std::size_t>(best)] = true;

    for (int inner = 0; inner < 3 * n + 10; ++inner) {
      std::vector<Eigen::Index> idx;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
      }
      Eigen::MatrixXd Ap(A.rows(), static_cast<Eigen::Index>(idx.size()));
      for (std::size_t k = 0; k < idx.size(); ++k) Ap.col(static_cast<Eigen::Index>(k)) = A.col(idx[k]);
      const Eigen::VectorXd zp = Ap.completeOrthogonalDecomposition().solve(b);
      Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
      for (std::size_t k = 0; k < idx.size(); ++k) z(idx[k]) = zp(static_cast<Eigen::Index>(k));

      bool feasible = true;
      for (Eigen::Index j : idx) feasible = feasible && z(j) > 0.0;
      if (feasible) {
        x = z;
        break;
      }
      double alpha = 1.0;
      for (Eigen::Index j : idx) {
        if (z(j) <= 0.0) alpha = std::min(alpha, x(j) / (x(j) - z(j)));
      }
      x += alpha * (z - x);
      for (Eigen::Index j : idx) {
        if (x(j) <= tol) {
          x(j) = 0.0;
          passive[static_cast<std::size_t>(j)] = false;
        }
      }
    }
  }
  return x;
}

}  // namespace

bool zero_in_relative_interior(std::span<const double> increments, std::size_t count, std::size_t dim) {
  if (dim == 0 || count == 0) return true;
  if (increments.size() != count * dim) throw ContractViolation("zero_in_relative_interior: size mismatch");
  double scale = 0.0;
  for (double x : increments) scale = std::max(scale, std::abs(x));
  if (scale == 0.0) return true;

  if (dim == 1) {
    const auto [lo, hi] = std::minmax_element(increments.begin(), increments.end());
    return *lo < 0.0 && *hi > 0.0;
  }

  // 0 is in the relative interior iff some strictly positive weights
  // annihilate the increments, iff each nonzero -s_i lies in the cone of the others.
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> S(
      increments.data(), static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < S.rows(); ++i) {
    if (S.row(i).cwiseAbs().maxCoeff() <= 1e-14 * scale) continue;
    if (S.rows() == 1) return false;
    Eigen::MatrixXd others(dim, S.rows() - 1);
    for (Eigen::Index j = 0, k = 0; j < S.rows(); ++j) {
      if (j != i) others.col(k++) = S.row(j).transpose();
    }
    const Eigen::VectorXd target = -S.row(i).transpose();
    const Eigen::VectorXd w = nnls(others, target);
    if ((others * w - target).norm() > 1e-9 * scale) return false;
  }
  return true;
}

bool check_one_step_arbitrage(const EventTree& tree, NodeId v) {
  return zero_in_relative_interior(tree.increments(v), tree.branch_count(v), tree.dim());
}

std::string ValidationReport::summary() const {
  if (ok()) return "valid";
  std::ostringstream os;
  os << violations.size() << " violation(s)";
  const std::size_t shown = std::min<std::size_t>(violations.size(), 5);
  for (std::size_t i = 0; i < shown; ++i) os << "; node " << violations[i].node << ": " << violations[i].message;
  return os.str();
}

ValidationReport validate_tree(const EventTree& tree) {
  ValidationReport report;
  auto add = [&](NodeId v, ViolationKind kind, std::string msg) {
    report.violations.push_back({v, kind, std::move(msg)});
  };
  if (tree.time_index(tree.root()) != 0) add(tree.root(), ViolationKind::kStructure, "root not at time 0");
  for (NodeId v = 0; v < tree.size(); ++v) {
    if (v != tree.root() && tree.parents(v).empty()) add(v, ViolationKind::kStructure, "node has no parent");
    if (tree.is_terminal(v)) {
      if (tree.time_index(v) != tree.steps()) {
        add(v, ViolationKind::kTerminalDepth,
            "leaf at time " + std::to_string(tree.time_index(v)) + " but horizon index is " +
                std::to_string(tree.steps()));
      }
      continue;
    }
    const auto probs = tree.probs(v);
    double sum = 0.0;
    bool range_ok = true;
    for (double p : probs) {
      if (!(p > 0.0 && p <= 1.0)) range_ok = false;
      sum += p;
    }
    if (!range_ok) add(v, ViolationKind::kProbabilityRange, "transition probability outside (0,1]");
    if (std::abs(sum - 1.0) > 1e-12) {
      std::ostringstream os;
      os.precision(17);
      os << "child probabilities sum to " << sum;
      add(v, ViolationKind::kProbabilityNormalization, os.str());
    }
    for (double x : tree.increments(v)) {
      if (!std::isfinite(x)) add(v, ViolationKind::kStructure, "non-finite asset increment");
    }
    if (!check_one_step_arbitrage(tree, v)) {
      add(v, ViolationKind::kArbitrage, "one-step arbitrage: 0 not in the relative interior of the increment hull");
    }
  }
  return report;
}

void require_valid(const EventTree& tree) {
  const auto report = validate_tree(tree);
  if (!report.ok()) throw ModelError("invalid event tree: " + report.summary());
}

// ---------------------------------------------------------------------------

TerminalClaim stopped_payoff(const AdaptedProcess& X, const AdaptedProcess& Y, const StoppingRule& tau,
                             const StoppingRule& sigma) {
  const EventTree& tree = X.tree();
  require_same_tree(tree, Y.tree(), "stopped_payoff");
  require_same_tree(tree, tau.tree(), "stopped_payoff");
  require_same_tree(tree, sigma.tree(), "stopped_payoff");
  if (tree.recombining()) throw ContractViolation("stopped_payoff requires a full event tree");

  std::vector<double> value(tree.size(), 0.0);
  std::vector<std::uint8_t> settled(tree.size(), 0);
  for (NodeId v : tree.order()) {
    const NodeId p = tree.parent(v);
    if (p != kNoNode && settled[p]) {
      settled[v] = 1;
      value[v] = value[p];
    } else if (tau.marked(v)) {  // tau <= sigma: exercise wins ties
      settled[v] = 1;
      value[v] = X[v];
    } else if (sigma.marked(v)) {
      settled[v] = 1;
      value[v] = Y[v];
    }
  }
  return TerminalClaim::from_function(tree, [&](NodeId v) { return value[v]; });
}

TerminalClaim stopped_value(const AdaptedProcess& process, const StoppingRule& rule) {
  require_same_tree(process.tree(), rule.tree(), "stopped_value");
  if (process.tree().recombining()) throw ContractViolation("stopped_value requires a full event tree");
  const auto profile = stop_profile(rule, process);
  return TerminalClaim::from_function(process.tree(), [&](NodeId v) { return profile.frozen[v]; });
}

double default_hitting_tolerance(const AdaptedProcess& L) { return 1e-9 * (1.0 + L.sup_abs()); }

StoppingRule hitting_rule(const AdaptedProcess& V, const AdaptedProcess& L, double tol) {
  require_same_tree(V.tree(), L.tree(), "hitting_rule");
  const EventTree& tree = V.tree();
  std::vector<std::uint8_t> marks(tree.size(), 0);
  for (NodeId v = 0; v < tree.size(); ++v) {
    const double gap = V[v] - L[v];
    if (gap < -tol) {
      std::ostringstream os;
      os.precision(17);
      os << "value process below payoff at node " << v << " (V - L = " << gap << ")";
      throw DominationError(os.str());
    }
    marks[v] = gap <= tol;
  }
  return StoppingRule(tree, std::move(marks));
}

StoppingRule hitting_rule(const AdaptedProcess& V, const AdaptedProcess& L) {
  return hitting_rule(V, L, default_hitting_tolerance(L));
}

void for_each_stopping_rule(const EventTree& tree, const std::function<void(const StoppingRule&)>& f,
                            std::size_t cap) {
  std::vector<NodeId> interior;
  for (NodeId v : tree.order()) {
    if (!tree.is_terminal(v)) interior.push_back(v);
  }
  if (interior.size() > cap) throw EnumerationCapError(interior.size(), cap);
  if (interior.size() >= 63) throw EnumerationCapError(interior.size(), 62);
  const std::uint64_t count = std::uint64_t{1} << interior.size();
  std::vector<std::uint8_t> marks(tree.size(), 0);
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    for (std::size_t i = 0; i < interior.size(); ++i) marks[interior[i]] = (mask >> i) & 1u;
    f(StoppingRule(tree, marks));
  }
}

std::vector<StoppingRule> enumerate_stopping_rules(const EventTree& tree, std::size_t cap) {
  std::vector<StoppingRule> out;
  for_each_stopping_rule(tree, [&](const StoppingRule& r) { out.push_back(r); }, cap);
  return out;
}

}  // namespace gccsolver
