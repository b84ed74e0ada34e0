#pragma once

// Finite event trees: the filtered probability space, adapted processes,
// stopping rules, trading strategies and the stopped game payoff.
//
// A tree is immutable once built. Copies share storage, so passing an
// EventTree by value is cheap and two copies compare as the same tree.

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace gccsolver {

using NodeId = std::uint32_t;
using EdgeId = std::uint32_t;
inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

enum class Layout {
  kFullTree,     // one node per path prefix; every node has a unique parent
  kRecombining,  // lattice nodes shared between paths (binomial only)
};

class EventTree {
 public:
  class Builder;

  std::size_t size() const noexcept;
  std::size_t edge_count() const noexcept;
  /// Number of traded assets (0 means no hedging instrument).
  std::size_t dim() const noexcept;
  int steps() const noexcept;
  double horizon() const noexcept;
  double dt() const noexcept { return horizon() / steps(); }
  bool recombining() const noexcept;

  NodeId root() const noexcept { return 0; }
  int time_index(NodeId v) const;
  double time(NodeId v) const { return time_index(v) * dt(); }
  bool is_terminal(NodeId v) const { return branch_count(v) == 0; }

  std::size_t branch_count(NodeId v) const;
  EdgeId first_edge(NodeId v) const;
  std::span<const NodeId> children(NodeId v) const;
  /// Transition probabilities of the branches leaving v, in child order.
  std::span<const double> probs(NodeId v) const;
  /// Row-major (branch_count x dim) block of asset increments leaving v.
  std::span<const double> increments(NodeId v) const;
  std::span<const double> edge_increment(EdgeId e) const;
  std::span<const double> edge_probs() const noexcept;

  std::span<const NodeId> parents(NodeId v) const;
  /// Unique parent on a full tree; first listed parent on a lattice; kNoNode at the root.
  NodeId parent(NodeId v) const;
  /// Edge from parent(v) into v; kNoNode at the root.
  EdgeId in_edge(NodeId v) const;

  /// All nodes sorted by time index (stable in id).
  std::span<const NodeId> order() const noexcept;
  std::span<const NodeId> level(int t) const;
  std::span<const NodeId> terminals() const noexcept;
  /// Position of a terminal node in terminals(); kNoNode for interior nodes.
  std::uint32_t terminal_rank(NodeId v) const;
  std::size_t non_terminal_count() const noexcept { return size() - terminals().size(); }

  bool same_as(const EventTree& other) const noexcept { return data_ == other.data_; }

  /// Nodes from the root to v along parent links (full trees only).
  std::vector<NodeId> path_to(NodeId v) const;

 private:
  struct Data;
  explicit EventTree(std::shared_ptr<const Data> data) : data_(std::move(data)) {}
  std::shared_ptr<const Data> data_;
};

/// Incremental construction. build() checks only what is needed to index the
/// structure (one root, valid ids, child time = parent time + 1); probability
/// and no-arbitrage checks are reported by validate_tree().
class EventTree::Builder {
 public:
  Builder(std::size_t dim, double horizon_years);
  ~Builder();
  Builder(Builder&&) noexcept;
  Builder& operator=(Builder&&) noexcept;

  NodeId add_node(int time_index);
  void add_branch(NodeId parent, NodeId child, double prob, std::span<const double> increment);
  EventTree build() &&;

 private:
  struct Pending;
  std::unique_ptr<Pending> pending_;
};

void require_same_tree(const EventTree& a, const EventTree& b, const char* what);

/// One real value per node.
class AdaptedProcess {
 public:
  AdaptedProcess(EventTree tree, std::vector<double> values);
  static AdaptedProcess constant(const EventTree& tree, double value);
  static AdaptedProcess from_function(const EventTree& tree, const std::function<double(NodeId)>& f);

  const EventTree& tree() const noexcept { return tree_; }
  double operator[](NodeId v) const { return values_[v]; }
  std::span<const double> values() const noexcept { return values_; }
  double sup_abs() const;
  double min() const;
  double max() const;

 private:
  EventTree tree_;
  std::vector<double> values_;
};

/// One real value per terminal node, indexed by terminal rank.
class TerminalClaim {
 public:
  TerminalClaim(EventTree tree, std::vector<double> values);
  static TerminalClaim constant(const EventTree& tree, double value);
  static TerminalClaim from_function(const EventTree& tree, const std::function<double(NodeId)>& f);
  /// Terminal slice of an adapted process.
  static TerminalClaim from_process(const AdaptedProcess& p);

  const EventTree& tree() const noexcept { return tree_; }
  double at(NodeId terminal) const;
  double by_rank(std::size_t rank) const { return values_[rank]; }
  std::span<const double> values() const noexcept { return values_; }
  double sup_abs() const;

  TerminalClaim operator+(const TerminalClaim& other) const;
  TerminalClaim operator-() const;
  TerminalClaim operator*(double s) const;
  TerminalClaim operator+(double c) const;

 private:
  EventTree tree_;
  std::vector<double> values_;
};

/// Adapted stop/continue marking. The induced stopping time of a path is the
/// first marked node on it; terminal nodes are always marked.
class StoppingRule {
 public:
  StoppingRule(EventTree tree, std::vector<std::uint8_t> marks);
  static StoppingRule at_maturity(const EventTree& tree);
  static StoppingRule immediate(const EventTree& tree);
  /// Marks the listed nodes plus every terminal node.
  static StoppingRule from_nodes(const EventTree& tree, std::span<const NodeId> nodes);

  const EventTree& tree() const noexcept { return tree_; }
  bool marked(NodeId v) const { return marks_[v] != 0; }
  std::span<const std::uint8_t> marks() const noexcept { return marks_; }

  /// Marking with v set iff the rule has stopped at or before v. Two rules
  /// induce the same stopping time iff their closures are equal.
  StoppingRule closure() const;
  /// Non-terminal nodes at which the rule actually stops (first marked node on some path).
  std::vector<NodeId> first_stop_nodes() const;
  /// Stable 64-bit hash of the induced stopping time.
  std::uint64_t hash() const;

  friend bool operator==(const StoppingRule& a, const StoppingRule& b);

 private:
  EventTree tree_;
  std::vector<std::uint8_t> marks_;
};

/// Same induced stopping time (closure equality).
bool same_stopping_time(const StoppingRule& a, const StoppingRule& b);

enum class StopStatus : std::uint8_t { kLive = 0, kStopsHere = 1, kStoppedBefore = 2 };

/// Per node: whether a rule is still running, stops exactly here, or stopped
/// at an ancestor; plus the carried process value frozen at the stop node.
struct StopProfile {
  std::vector<StopStatus> status;
  std::vector<double> frozen;  // value of `carried` at the stop node (NaN while live)
  std::vector<NodeId> stop_node;  // kNoNode while live
};

/// Forward pass. On recombining lattices throws PathDependenceError when the
/// parents of a node disagree on status or frozen value.
StopProfile stop_profile(const StoppingRule& rule, const AdaptedProcess& carried);
StopProfile stop_profile(const StoppingRule& rule);

/// Time index of the induced stopping time, per terminal rank (full trees only).
std::vector<int> induced_times(const StoppingRule& rule);

/// True iff a stops no later than b on every path.
bool stops_no_later(const StoppingRule& a, const StoppingRule& b);

/// Holdings per non-terminal node: dim() shares per node, row-major.
class TradingStrategy {
 public:
  TradingStrategy(EventTree tree, std::vector<double> holdings);
  static TradingStrategy zero(const EventTree& tree);
  const EventTree& tree() const noexcept { return tree_; }
  std::span<const double> holding(NodeId v) const;

 private:
  EventTree tree_;
  std::vector<double> holdings_;
};

/// Gains sum of holding . dS over steps starting at time index >= from_time (full trees only).
TerminalClaim trading_gains(const TradingStrategy& strategy, int from_time = 0);

struct BinomialModel {
  EventTree tree;
  AdaptedProcess W;        // symmetric walk, W_0 = 0
  AdaptedProcess drifted;  // W_t + drift * t
};

struct TrinomialModel {
  EventTree tree;
  AdaptedProcess traded;    // cumulative traded-asset increments, S_0 = 0
  AdaptedProcess untraded;  // driver imperfectly spanned by the traded asset
};

enum class CorrelationPattern {
  kOrthogonal,  // untraded increments uncorrelated with the traded ones under P
  kPartial,     // correlation 1/sqrt(2)
  kSkewed,      // asymmetric probabilities; P is not a martingale measure
};

/// Symmetric binomial walk with increments +-vol*sqrt(dt), probabilities 1/2.
/// When `traded`, the walk is also the single traded asset (complete market).
BinomialModel build_binomial(int steps, double horizon_years, double drift, double vol, bool traded,
                             Layout layout = Layout::kFullTree);

/// Full trinomial tree with the given per-step branch pattern (children in
/// the listed order). Rejects patterns with one-step arbitrage.
TrinomialModel build_trinomial(int steps, double horizon_years, const std::array<double, 3>& probs,
                               const std::array<double, 3>& traded_increments,
                               const std::array<double, 3>& untraded_increments);

TrinomialModel build_incomplete_trinomial(int steps, double horizon_years, double traded_vol,
                                          double untraded_vol, CorrelationPattern pattern);

enum class ViolationKind {
  kProbabilityRange,
  kProbabilityNormalization,
  kStructure,
  kTerminalDepth,
  kArbitrage,
};

struct Violation {
  NodeId node;
  ViolationKind kind;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const noexcept { return violations.empty(); }
  std::string summary() const;
};

ValidationReport validate_tree(const EventTree& tree);
/// Throws ModelError carrying the report summary when validation fails.
void require_valid(const EventTree& tree);

/// True iff 0 lies in the relative interior of the convex hull of the
/// increments leaving v (always true when dim() == 0).
bool check_one_step_arbitrage(const EventTree& tree, NodeId v);
/// Same test on an explicit (count x dim) row-major increment block.
bool zero_in_relative_interior(std::span<const double> increments, std::size_t count, std::size_t dim);

/// Buyer payoff X_tau if tau <= sigma, Y_sigma otherwise, delivered at the
/// terminal node of each path (full trees only).
TerminalClaim stopped_payoff(const AdaptedProcess& X, const AdaptedProcess& Y, const StoppingRule& tau,
                             const StoppingRule& sigma);

/// Process value at the induced stopping time, per path (full trees only).
TerminalClaim stopped_value(const AdaptedProcess& process, const StoppingRule& rule);

double default_hitting_tolerance(const AdaptedProcess& L);

/// Marks v iff V - L <= tol. Throws DominationError if V < L - tol anywhere.
StoppingRule hitting_rule(const AdaptedProcess& V, const AdaptedProcess& L, double tol);
StoppingRule hitting_rule(const AdaptedProcess& V, const AdaptedProcess& L);

inline constexpr std::size_t kDefaultEnumerationCap = 16;

/// Calls f for every marking of the non-terminal nodes (2^m rules).
void for_each_stopping_rule(const EventTree& tree, const std::function<void(const StoppingRule&)>& f,
                            std::size_t cap = kDefaultEnumerationCap);
std::vector<StoppingRule> enumerate_stopping_rules(const EventTree& tree,
                                                   std::size_t cap = kDefaultEnumerationCap);

}  // namespace gccsolver
