#pragma once

// JSON model files ("gccsolver-model-v1"), stopping-rule files and reports.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gccsolver/dynkin.hpp"

namespace gccsolver {

inline constexpr const char* kModelSchema = "gccsolver-model-v1";
inline constexpr const char* kRulesSchema = "gccsolver-rules-v1";

struct ModelFile {
  EventTree tree;
  std::map<std::string, AdaptedProcess> processes;
  std::map<std::string, TerminalClaim> claims;

  const AdaptedProcess& process(const std::string& name) const;
  const TerminalClaim& claim(const std::string& name) const;
};

/// Parses and validates a model. Throws ModelError on malformed input or a
/// tree that fails validate_tree().
ModelFile read_model(std::istream& is);
ModelFile load_model(const std::filesystem::path& path);

/// Full trees only (a lattice node has several parents).
void write_model(std::ostream& os, const ModelFile& model);

struct RulePair {
  std::optional<StoppingRule> buyer;
  std::optional<StoppingRule> seller;
};

/// {"schema": ..., "buyer": [node ids], "seller": [node ids]}; terminals are implied.
RulePair read_rules(std::istream& is, const EventTree& tree);
RulePair load_rules(const std::filesystem::path& path, const EventTree& tree);
void write_rules(std::ostream& os, const StoppingRule& buyer, const StoppingRule& seller);

void write_equilibrium_report(std::ostream& os, const NashResult& result, const NepReport& verification);
void write_verification_report(std::ostream& os, const StoppingRule& buyer, const StoppingRule& seller,
                               const NepReport& snell, const std::optional<NepReport>& exhaustive);

}  // namespace gccsolver
