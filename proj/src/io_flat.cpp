#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "dtp/io.hpp"

namespace dtp {
namespace {

struct Token {
  std::string text;
  std::size_t column = 1;
};

std::vector<Token> tokenize(std::string_view line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    if (line[i] == '#') break;
    if (line[i] == ' ' || line[i] == '\t' || line[i] == '\r') {
      ++i;
      continue;
    }
    Token t{{}, i + 1};
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r' && line[i] != '#')
      t.text += line[i++];
    out.push_back(std::move(t));
  }
  return out;
}

std::optional<double> to_real(std::string_view s) {
  double v = 0.0;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

struct RowSource {
  std::size_t line = 0;
  std::size_t column = 1;
};

// Row data keyed by source state, pending until every state is declared.
struct RowBlock {
  std::string name;
  std::size_t line = 0, column = 1;
  double cost = 0.0;
  std::map<std::size_t, std::vector<std::pair<std::size_t, double>>> rows;
  std::map<std::size_t, RowSource> row_source;
  std::map<std::size_t, double> cost_overrides;
  std::optional<double> default_occurrence;
  std::map<std::size_t, double> occurrence;
  bool is_event = false;
};

class FlatParser {
 public:
  explicit FlatParser(std::string_view text) : text_(text) {}

  FlatDocument run() {
    std::istringstream in{std::string(text_)};
    std::string raw;
    while (std::getline(in, raw)) {
      ++line_;
      const auto toks = tokenize(raw);
      if (!toks.empty()) statement(toks);
    }
    if (!have_states_) diag(1, 1, "missing 'states' declaration");
    if (!diags_.empty()) throw ParseError(std::move(diags_));
    auto doc = build();
    if (!diags_.empty()) throw ParseError(std::move(diags_));
    return doc;
  }

 private:
  void diag(std::size_t line, std::size_t column, std::string message) {
    diags_.push_back({line, column, std::move(message)});
  }

  std::optional<std::size_t> state(const Token& t) {
    auto it = index_.find(t.text);
    if (it == index_.end()) {
      diag(line_, t.column, "unknown state '" + t.text + "'");
      return std::nullopt;
    }
    return it->second;
  }

  std::optional<double> real(const Token& t) {
    auto v = to_real(t.text);
    if (!v) diag(line_, t.column, "expected a number, got '" + t.text + "'");
    return v;
  }

  std::optional<double> probability(const Token& t) {
    auto v = real(t);
    if (v && !(*v >= 0.0 && *v <= 1.0)) {
      diag(line_, t.column, "probability " + t.text + " outside [0,1]");
      return std::nullopt;
    }
    return v;
  }

  void statement(const std::vector<Token>& toks) {
    const auto& kw = toks[0].text;
    if (kw == "states") {
      if (toks.size() < 2) diag(line_, toks[0].column, "'states' needs at least one identifier");
      for (std::size_t i = 1; i < toks.size(); ++i) {
        if (index_.count(toks[i].text)) {
          diag(line_, toks[i].column, "duplicate state '" + toks[i].text + "'");
          continue;
        }
        index_[toks[i].text] = states_.size();
        states_.push_back(toks[i].text);
      }
      have_states_ = true;
      section_ = Section::None;
    } else if (kw == "discount" || kw == "horizon") {
      section_ = Section::None;
      if (toks.size() != 2) {
        diag(line_, toks[0].column, "'" + kw + "' takes one value");
        return;
      }
      if (kw == "discount") {
        auto g = real(toks[1]);
        if (g && !(*g >= 0.0 && *g < 1.0)) diag(line_, toks[1].column, "discount must lie in [0, 1)");
        if (g) criterion_ = Discounted{*g};
      } else {
        int t = 0;
        auto [p, ec] = std::from_chars(toks[1].text.data(), toks[1].text.data() + toks[1].text.size(), t);
        if (ec != std::errc{} || p != toks[1].text.data() + toks[1].text.size() || t < 1)
          diag(line_, toks[1].column, "horizon must be a positive integer");
        else
          criterion_ = FiniteHorizon{t};
      }
    } else if (kw == "init") {
      section_ = Section::None;
      if (toks.size() < 3 || toks.size() % 2 == 0) {
        diag(line_, toks[0].column, "'init' takes state/probability pairs");
        return;
      }
      init_line_ = line_;
      init_.emplace();
      for (std::size_t i = 1; i + 1 < toks.size(); i += 2) {
        auto s = state(toks[i]);
        auto p = probability(toks[i + 1]);
        if (s && p) (*init_)[*s] += *p;
      }
    } else if (kw == "action") {
      if (toks.size() != 4 || toks[2].text != "cost") {
        diag(line_, toks[0].column, "expected 'action <id> cost <real>'");
        section_ = Section::None;
        return;
      }
      RowBlock b;
      b.name = toks[1].text;
      b.line = line_;
      b.column = toks[1].column;
      if (auto c = real(toks[3])) b.cost = *c;
      for (const auto& a : blocks_)
        if (!a.is_event && a.name == b.name) diag(line_, toks[1].column, "duplicate action '" + b.name + "'");
      blocks_.push_back(std::move(b));
      section_ = Section::Rows;
    } else if (kw == "event") {
      if (toks.size() != 2) {
        diag(line_, toks[0].column, "expected 'event <id>'");
        section_ = Section::None;
        return;
      }
      RowBlock b;
      b.name = toks[1].text;
      b.line = line_;
      b.column = toks[1].column;
      b.is_event = true;
      blocks_.push_back(std::move(b));
      section_ = Section::Rows;
    } else if (kw == "costrow") {
      if (section_ != Section::Rows || blocks_.back().is_event) {
        diag(line_, toks[0].column, "'costrow' outside an action block");
        return;
      }
      if (toks.size() != 3) {
        diag(line_, toks[0].column, "expected 'costrow <state> <real>'");
        return;
      }
      auto s = state(toks[1]);
      auto c = real(toks[2]);
      if (s && c) blocks_.back().cost_overrides[*s] = *c;
    } else if (kw == "occur") {
      if (section_ != Section::Rows || !blocks_.back().is_event) {
        diag(line_, toks[0].column, "'occur' outside an event block");
        return;
      }
      if (toks.size() != 3) {
        diag(line_, toks[0].column, "expected 'occur <state|default> <real>'");
        return;
      }
      auto p = probability(toks[2]);
      if (!p) return;
      if (toks[1].text == "default") {
        blocks_.back().default_occurrence = *p;
      } else if (auto s = state(toks[1])) {
        blocks_.back().occurrence[*s] = *p;
      }
    } else if (kw == "reward") {
      if (toks.size() != 1) diag(line_, toks[1].column, "'reward' stands alone on its line");
      section_ = Section::Reward;
    } else if (toks.size() >= 2 && toks[1].text == ":") {
      if (section_ == Section::Rows)
        row(toks);
      else if (section_ == Section::Reward)
        reward_line(toks);
      else
        diag(line_, toks[0].column, "row outside an action, event or reward block");
    } else {
      diag(line_, toks[0].column, "unknown keyword '" + kw + "'");
    }
  }

  void row(const std::vector<Token>& toks) {
    auto& b = blocks_.back();
    auto src = state(toks[0]);
    if (toks.size() < 4 || toks.size() % 2 != 0) {
      diag(line_, toks[0].column, "expected '<src> : (<dst> <real>)+'");
      return;
    }
    if (!src) return;
    if (b.rows.count(*src)) {
      diag(line_, toks[0].column, "duplicate row for state '" + toks[0].text + "'");
      return;
    }
    std::vector<std::pair<std::size_t, double>> entries;
    for (std::size_t i = 2; i + 1 < toks.size(); i += 2) {
      auto dst = state(toks[i]);
      auto p = probability(toks[i + 1]);
      if (dst && p) entries.emplace_back(*dst, *p);
    }
    b.rows[*src] = std::move(entries);
    b.row_source[*src] = {line_, toks[0].column};
  }

  void reward_line(const std::vector<Token>& toks) {
    if (toks.size() != 3) {
      diag(line_, toks[0].column, "expected '<state|default> : <real>'");
      return;
    }
    auto r = real(toks[2]);
    if (!r) return;
    if (toks[0].text == "default") {
      reward_default_ = *r;
    } else if (auto s = state(toks[0])) {
      if (reward_.count(*s)) diag(line_, toks[0].column, "duplicate reward for '" + toks[0].text + "'");
      reward_[*s] = *r;
    }
  }

  Matrix build_matrix(const RowBlock& b, const std::string& what) {
    const auto n = states_.size();
    std::vector<Eigen::Triplet<double>> entries;
    for (std::size_t s = 0; s < n; ++s) {
      auto it = b.rows.find(s);
      if (it == b.rows.end()) {
        entries.emplace_back(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s), 1.0);
        continue;
      }
      double sum = 0.0;
      for (const auto& [dst, p] : it->second) {
        sum += p;
        if (p != 0.0)
          entries.emplace_back(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(dst), p);
      }
      if (std::abs(sum - 1.0) > kStochasticTol) {
        std::ostringstream os;
        os << "row sum " << sum << " ≠ 1 (" << what << " " << b.name << ", state " << states_[s] << ")";
        const auto src = b.row_source.at(s);
        diag(src.line, src.column, os.str());
      }
    }
    Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    m.setFromTriplets(entries.begin(), entries.end());
    m.makeCompressed();
    return m;
  }

  FlatDocument build() {
    FlatDocument doc;
    auto& mdp = doc.mdp;
    mdp.states = states_;
    mdp.criterion = criterion_;
    mdp.reward.assign(states_.size(), reward_default_);
    for (const auto& [s, r] : reward_) mdp.reward[s] = r;
    if (init_) {
      std::vector<double> init(states_.size(), 0.0);
      double sum = 0.0;
      for (const auto& [s, p] : *init_) {
        init[s] = p;
        sum += p;
      }
      if (std::abs(sum - 1.0) > kStochasticTol) {
        std::ostringstream os;
        os << "initial distribution sums to " << sum << " ≠ 1";
        diag(init_line_, 1, os.str());
      }
      mdp.initial = std::move(init);
    }
    for (const auto& b : blocks_) {
      if (b.is_event) {
        ExogenousEvent e;
        e.name = b.name;
        e.matrix = build_matrix(b, "event");
        e.occurrence.assign(states_.size(), b.default_occurrence.value_or(1.0));
        for (const auto& [s, p] : b.occurrence) e.occurrence[s] = p;
        doc.events.push_back(std::move(e));
      } else {
        ActionRecord a;
        a.name = b.name;
        a.matrix = build_matrix(b, "action");
        a.default_cost = b.cost;
        a.cost_overrides = b.cost_overrides;
        mdp.actions.push_back(std::move(a));
      }
    }
    if (mdp.actions.empty()) diag(1, 1, "no actions declared");
    if (diags_.empty())
      for (const auto& issue : validate_mdp(mdp).issues)
        diag(1, 1, issue.message + " (" + issue.location + ")");
    return doc;
  }

  enum class Section { None, Rows, Reward };

  std::string_view text_;
  std::size_t line_ = 0;
  std::vector<Diagnostic> diags_;
  bool have_states_ = false;
  std::vector<std::string> states_;
  std::map<std::string, std::size_t> index_;
  Criterion criterion_ = Discounted{0.9};
  std::optional<std::map<std::size_t, double>> init_;
  std::size_t init_line_ = 0;
  std::vector<RowBlock> blocks_;
  double reward_default_ = 0.0;
  std::map<std::size_t, double> reward_;
  Section section_ = Section::None;
};

}  // namespace

FlatDocument parse_flat_document(std::string_view text) { return FlatParser(text).run(); }

FlatMdp parse_flat(std::string_view text) { return parse_flat_document(text).mdp; }

bool looks_factored(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (c == ';' || c == '#') {
      while (i < text.size() && text[i] != '\n') ++i;
    } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      ++i;
    } else {
      return c == '(';
    }
  }
  return false;
}

}  // namespace dtp
