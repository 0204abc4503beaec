#pragma once

// Justification graphs built by meta-interpretation over completed tables.
// Nodes are created lazily: a node knows its children one layer ahead so
// that its expansion flag is exact, and expand() materializes them.

#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "silk/engine.hpp"

namespace silk {

enum class NodeKind { G, A, F, P };
enum class TvColor { Green, Red, Amber };
enum class ArgStatus { UndefeatedBang, DefeatedDownarrow };
enum class Side { Pro, ConBar };
enum class Expansion { MoreProAndConBlackPlus, MoreProGreenPlus, None };

const char* to_string(NodeKind k);
const char* to_string(TvColor c);
const char* to_string(ArgStatus s);
const char* to_string(Side s);
const char* to_string(Expansion e);
TvColor color_of(TruthValue tv);

class UnknownNode : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

struct JustificationNode {
  int id = -1;
  int parent = -1;
  NodeKind kind = NodeKind::G;
  Term literal;                  // G, F: encoded atom
  bool naf = false;              // G: default-negated body element
  std::string rule_id;           // A
  Term tag;                      // A
  std::vector<BodyLiteral> body; // A: instantiated, defeat check removed
  Term head;                     // A: instantiated head
  Term overrider, overridden;    // P
  std::optional<TvColor> tv_color;
  std::optional<ArgStatus> arg_status;
  Side side = Side::Pro;
  Expansion expansion = Expansion::None;
  std::vector<int> children;     // materialized ids
  bool revisit = false;          // G repeating an ancestor
  bool evaluated = true;         // false when no table covers the literal
  std::string restrained;        // non-empty: marker reason of a restraint leaf
  std::string text;
};

/// A session over one finished evaluation. Node ids are stable within it.
class Justification {
 public:
  explicit Justification(const EvaluationHandle& h);
  Justification(std::shared_ptr<const CompiledKB> kb, const Engine& engine);
  ~Justification();
  Justification(const Justification&) = delete;
  Justification& operator=(const Justification&) = delete;

  /// Root G node for `l`. Throws NoSuchTable when no table covers it.
  const JustificationNode& root(const Literal& l);
  const JustificationNode& root_encoded(const Term& encoded);
  /// Materializes the children of `id` and clears its expansion flag.
  std::vector<JustificationNode> expand(int id);
  const JustificationNode& node(int id) const;
  std::size_t size() const;
  /// Pro and con children not yet materialized.
  std::pair<std::size_t, std::size_t> pending(int id) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

const JustificationNode& justify_root(Justification& session, const Literal& l);

/// English text for an encoded atom: the highest-priority matching textgen
/// rule, then the isa default, then the literal's source text. Explicitly
/// negated atoms read "It is not the case that ...".
std::string render_literal(const Term& encoded_atom, const std::vector<TextgenRule>& rules);
std::string render(const JustificationNode& n, const std::vector<TextgenRule>& rules);

}  // namespace silk
