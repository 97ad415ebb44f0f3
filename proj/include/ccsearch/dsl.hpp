#pragma once

#include <cctype>
#include <charconv>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ccsearch/scenario.hpp"
#include "ccsearch/simulator.hpp"

namespace ccsearch::dsl {

struct ParseDiagnostic {
  int line = 1;
  int column = 1;
  std::string message;
  enum class Severity { error, warning } severity = Severity::error;
};

enum class VehicleRole { ego, adversary };

struct VehicleDecl {
  VehicleRole role = VehicleRole::ego;
  ManeuverKind maneuver = ManeuverKind::cross_straight;
  std::optional<ApproachKind> approach;  // required for the adversary, absent for the ego

  bool operator==(const VehicleDecl&) const = default;
};

struct ParamDecl {
  std::string name;
  double low = 0.0;
  double high = 0.0;
  Unit unit = Unit::dimensionless;

  bool operator==(const ParamDecl&) const = default;
};

struct SimDecl {
  std::optional<double> timestep_s;
  std::optional<double> horizon_s;

  bool operator==(const SimDecl&) const = default;
};

/// Canonicalized script: parameter declarations equal to the built-in
/// defaults are dropped, params are kept in gene order, and a lane
/// declaration is kept (and defaulted) only for custom scenarios.
struct ScriptAst {
  ScenarioId id = ScenarioId::A;
  std::optional<LaneLayout> lanes;  // set iff id == custom
  VehicleDecl ego;
  VehicleDecl adversary;
  std::vector<ParamDecl> params;
  SimDecl sim;

  bool operator==(const ScriptAst&) const = default;
};

struct ParseResult {
  std::optional<ScriptAst> ast;
  std::vector<ParseDiagnostic> diagnostics;

  bool ok() const { return ast.has_value(); }
};

namespace detail {

struct Token {
  std::string text;  // lowercased for keywords; raw for names/numbers
  std::string raw;
  int column = 1;
};

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline bool tokenize_line(const std::string& line, int line_no, std::vector<Token>& out,
                          std::vector<ParseDiagnostic>& diags) {
  out.clear();
  for (std::size_t i = 0; i < line.size();) {
    const char c = line[i];
    if (c == '#') break;
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '[' || c == ']' || c == ',') {
      out.push_back({std::string(1, c), std::string(1, c), static_cast<int>(i) + 1});
      ++i;
      continue;
    }
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '+' || c == '.') {
      std::size_t j = i;
      while (j < line.size() &&
             (std::isalnum(static_cast<unsigned char>(line[j])) || line[j] == '_' || line[j] == '-' ||
              line[j] == '+' || line[j] == '.'))
        ++j;
      const std::string raw = line.substr(i, j - i);
      out.push_back({lower(raw), raw, static_cast<int>(i) + 1});
      i = j;
      continue;
    }
    diags.push_back({line_no, static_cast<int>(i) + 1,
                     std::string("lexical error: unexpected character '") + c + "'",
                     ParseDiagnostic::Severity::error});
    return false;
  }
  return true;
}

inline std::optional<double> parse_number(const Token& t) {
  double v = 0.0;
  const char* begin = t.raw.data();
  const char* end = begin + t.raw.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc{} || res.ptr != end) return std::nullopt;
  return v;
}

inline std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline const ParameterRange* default_range_for(std::string_view name) {
  static const std::vector<ParameterRange> defaults = default_ranges();
  for (const auto& r : defaults)
    if (r.name == name) return &r;
  return nullptr;
}

inline int gene_index_for(std::string_view name) {
  for (std::size_t i = 0; i < kParameterNames.size(); ++i)
    if (kParameterNames[i] == name) return static_cast<int>(i);
  return -1;
}

}  // namespace detail

/// Parses a scenario script. Never throws on malformed input: failures are
/// reported as positioned diagnostics and an absent AST.
inline ParseResult parse(std::string_view source) {
  using Sev = ParseDiagnostic::Severity;
  ParseResult result;
  auto& diags = result.diagnostics;

  std::optional<ScenarioId> id;
  std::optional<LaneLayout> lanes;
  int lanes_line = 1;
  std::optional<VehicleDecl> ego, adversary;
  std::vector<ParamDecl> params;
  SimDecl sim;

  std::istringstream in{std::string(source)};
  std::string line;
  int line_no = 0;
  std::vector<detail::Token> tok;
  while (std::getline(in, line)) {
    ++line_no;
    if (!detail::tokenize_line(line, line_no, tok, diags)) continue;
    if (tok.empty()) continue;
    const auto& head = tok[0];

    const auto err = [&](int col, const std::string& msg) { diags.push_back({line_no, col, msg, Sev::error}); };
    const auto too_few = [&]() { err(static_cast<int>(line.size()) + 1, "unexpected end of line"); };

    if (head.text == "scenario") {
      if (tok.size() < 2) { too_few(); continue; }
      if (tok.size() > 2) { err(tok[2].column, "trailing tokens after scenario declaration"); continue; }
      if (id) { err(head.column, "duplicate scenario declaration"); continue; }
      const std::string& v = tok[1].text;
      if (v == "custom") {
        id = ScenarioId::custom;
      } else if (v.size() == 1 && v[0] >= 'a' && v[0] <= 'f') {
        id = static_cast<ScenarioId>(v[0] - 'a');
      } else {
        err(tok[1].column, "unknown scenario id '" + tok[1].raw + "' (expected A..F or custom)");
      }
    } else if (head.text == "lanes") {
      if (tok.size() < 2) { too_few(); continue; }
      if (lanes) { err(head.column, "duplicate lanes declaration"); continue; }
      lanes_line = line_no;
      if (tok[1].text == "2x2") lanes = LaneLayout::two_by_two;
      else if (tok[1].text == "3") lanes = LaneLayout::three_lane;
      else err(tok[1].column, "unknown lane layout '" + tok[1].raw + "' (expected 2x2 or 3)");
    } else if (head.text == "ego" || head.text == "adversary") {
      VehicleDecl decl;
      decl.role = head.text == "ego" ? VehicleRole::ego : VehicleRole::adversary;
      std::size_t i = 1;
      if (i < tok.size() && (tok[i].text == "opposite" || tok[i].text == "perpendicular")) {
        decl.approach = tok[i].text == "opposite" ? ApproachKind::same_road_opposite
                                                  : ApproachKind::perpendicular;
        ++i;
      }
      if (i >= tok.size()) { too_few(); continue; }
      if (tok[i].text == "crosses") {
        decl.maneuver = ManeuverKind::cross_straight;
        ++i;
      } else if (tok[i].text == "turns") {
        ++i;
        if (i >= tok.size()) { too_few(); continue; }
        if (tok[i].text == "left") decl.maneuver = ManeuverKind::left_turn;
        else if (tok[i].text == "right") decl.maneuver = ManeuverKind::right_turn;
        else { err(tok[i].column, "unknown turn direction '" + tok[i].raw + "'"); continue; }
        ++i;
      } else {
        err(tok[i].column, "unknown maneuver '" + tok[i].raw + "' (expected crosses or turns left/right)");
        continue;
      }
      if (i != tok.size()) { err(tok[i].column, "trailing tokens after vehicle declaration"); continue; }
      if (decl.role == VehicleRole::ego) {
        if (decl.approach) { err(head.column, "ego takes no approach keyword"); continue; }
        if (ego) { err(head.column, "duplicate ego declaration"); continue; }
        ego = decl;
      } else {
        if (!decl.approach) { err(head.column, "adversary requires an approach (opposite or perpendicular)"); continue; }
        if (adversary) { err(head.column, "duplicate adversary declaration"); continue; }
        adversary = decl;
      }
    } else if (head.text == "param") {
      // param NAME in [ low , high ] [unit]
      if (tok.size() < 8) { too_few(); continue; }
      const std::string& name = tok[1].raw;  // case-sensitive
      if (detail::gene_index_for(name) < 0) {
        err(tok[1].column, "unknown parameter '" + name + "'");
        continue;
      }
      bool shape_ok = tok[2].text == "in" && tok[3].text == "[" && tok[5].text == "," && tok[7].text == "]";
      const auto low = detail::parse_number(tok[4]);
      const auto high = detail::parse_number(tok[6]);
      if (!shape_ok || !low || !high) {
        err(tok[2].column, "malformed parameter range (expected: param NAME in [low, high] [unit])");
        continue;
      }
      Unit unit = Unit::dimensionless;
      if (tok.size() > 8) {
        if (tok.size() > 9) { err(tok[9].column, "trailing tokens after parameter declaration"); continue; }
        if (tok[8].text == "kmh") unit = Unit::km_per_h;
        else if (tok[8].text == "m") unit = Unit::meters;
        else { err(tok[8].column, "unknown unit '" + tok[8].raw + "' (expected kmh or m)"); continue; }
      }
      const ParameterRange* def = detail::default_range_for(name);
      if (unit != def->unit) {
        const std::string expected(unit_name(def->unit));
        err(tok[1].column, "unit mismatch for '" + name + "' (expected " +
                               (expected.empty() ? std::string("no unit") : expected) + ")");
        continue;
      }
      if (*low > *high) { err(tok[4].column, "range low exceeds high"); continue; }
      bool duplicate = false;
      for (const auto& p : params)
        if (p.name == name) duplicate = true;
      if (duplicate) { err(tok[1].column, "duplicate parameter '" + name + "'"); continue; }
      params.push_back({name, *low, *high, unit});
    } else if (head.text == "sim") {
      if (tok.size() < 3) { too_few(); continue; }
      const auto value = detail::parse_number(tok[2]);
      if (!value) { err(tok[2].column, "malformed number '" + tok[2].raw + "'"); continue; }
      if (*value <= 0.0) { err(tok[2].column, "sim setting must be positive"); continue; }
      if (tok[1].text == "timestep") {
        if (sim.timestep_s) { err(tok[1].column, "duplicate sim setting 'timestep'"); continue; }
        sim.timestep_s = *value;
      } else if (tok[1].text == "horizon") {
        if (sim.horizon_s) { err(tok[1].column, "duplicate sim setting 'horizon'"); continue; }
        sim.horizon_s = *value;
      } else {
        err(tok[1].column, "unknown sim setting '" + tok[1].raw + "' (expected timestep or horizon)");
      }
    } else {
      diags.push_back({line_no, head.column, "unknown keyword '" + head.raw + "'", Sev::error});
    }
  }

  if (!id) diags.push_back({std::max(1, line_no), 1, "missing scenario declaration", Sev::error});
  if (!ego) diags.push_back({std::max(1, line_no), 1, "missing vehicle declaration: ego", Sev::error});
  if (!adversary)
    diags.push_back({std::max(1, line_no), 1, "missing vehicle declaration: adversary", Sev::error});

  // canonicalize lanes: implied for A..F, explicit (defaulted) for custom
  if (id && lanes && *id != ScenarioId::custom) {
    const LaneLayout expected = *id == ScenarioId::F ? LaneLayout::three_lane : LaneLayout::two_by_two;
    if (*lanes != expected)
      diags.push_back({lanes_line, 1,
                       std::string("lane count conflicts with scenario ") + scenario_letter(*id),
                       Sev::error});
    lanes.reset();
  }
  if (id && *id == ScenarioId::custom && !lanes) lanes = LaneLayout::two_by_two;

  for (const auto& d : diags)
    if (d.severity == Sev::error) return result;

  ScriptAst ast;
  ast.id = *id;
  ast.lanes = lanes;
  ast.ego = *ego;
  ast.adversary = *adversary;
  ast.sim = sim;
  // canonical order; default-equal declarations are dropped
  for (const auto& name : kParameterNames) {
    for (const auto& p : params) {
      if (p.name != name) continue;
      const ParameterRange* def = detail::default_range_for(p.name);
      if (p.low != def->low || p.high != def->high) ast.params.push_back(p);
    }
  }
  result.ast = ast;
  return result;
}

/// Canonical text form; parse(format(ast)) == ast for every valid AST.
inline std::string format(const ScriptAst& ast) {
  std::string out;
  out += "scenario ";
  out += ast.id == ScenarioId::custom ? std::string("custom") : std::string(1, scenario_letter(ast.id));
  out += '\n';
  if (ast.id == ScenarioId::custom)
    out += std::string("lanes ") + (ast.lanes == LaneLayout::three_lane ? "3" : "2x2") + "\n";

  const auto maneuver_text = [](ManeuverKind m) {
    switch (m) {
      case ManeuverKind::cross_straight: return std::string("crosses");
      case ManeuverKind::left_turn: return std::string("turns left");
      case ManeuverKind::right_turn: return std::string("turns right");
    }
    return std::string();
  };
  out += "ego " + maneuver_text(ast.ego.maneuver) + "\n";
  out += std::string("adversary ") +
         (ast.adversary.approach == ApproachKind::same_road_opposite ? "opposite" : "perpendicular") +
         " " + maneuver_text(ast.adversary.maneuver) + "\n";
  for (const auto& p : ast.params) {
    out += "param " + p.name + " in [" + detail::format_number(p.low) + ", " +
           detail::format_number(p.high) + "]";
    const std::string_view u = unit_name(p.unit);
    if (!u.empty()) out += std::string(" ") + std::string(u);
    out += '\n';
  }
  if (ast.sim.timestep_s) out += "sim timestep " + detail::format_number(*ast.sim.timestep_s) + "\n";
  if (ast.sim.horizon_s) out += "sim horizon " + detail::format_number(*ast.sim.horizon_s) + "\n";
  return out;
}

struct CompiledScenario {
  ScenarioTemplate scenario;
  std::vector<ParameterRange> ranges;
  SimulationConfig sim;
};

struct CompileResult {
  std::optional<CompiledScenario> compiled;
  std::vector<ParseDiagnostic> diagnostics;

  bool ok() const { return compiled.has_value(); }
};

/// Lowers a parsed script onto the scenario model. For A..F the vehicle
/// declarations must agree with the fixed template; custom scenarios are
/// synthesized from their declarations.
inline CompileResult compile(const ScriptAst& ast, const IntersectionLayout& geometry = {}) {
  CompileResult result;
  auto& diags = result.diagnostics;

  ScenarioTemplate tmpl;
  if (ast.id == ScenarioId::custom) {
    tmpl = make_template(ScenarioId::custom, ast.lanes.value_or(LaneLayout::two_by_two),
                         ast.ego.maneuver, ast.adversary.maneuver,
                         ast.adversary.approach.value_or(ApproachKind::perpendicular), geometry);
  } else {
    tmpl = template_for(ast.id, geometry);
    const char letter = scenario_letter(ast.id);
    if (ast.ego.maneuver != tmpl.ego_maneuver)
      diags.push_back({1, 1, std::string("ego maneuver conflicts with scenario ") + letter,
                       ParseDiagnostic::Severity::error});
    if (ast.adversary.maneuver != tmpl.adv_maneuver)
      diags.push_back({1, 1, std::string("adversary maneuver conflicts with scenario ") + letter,
                       ParseDiagnostic::Severity::error});
    if (ast.adversary.approach && *ast.adversary.approach != tmpl.adv_approach)
      diags.push_back({1, 1, std::string("adversary approach conflicts with scenario ") + letter,
                       ParseDiagnostic::Severity::error});
  }
  if (!diags.empty()) return result;

  std::vector<ParameterRange> ranges = default_ranges();
  for (const auto& p : ast.params)
    for (auto& r : ranges)
      if (r.name == p.name) r = {p.name, p.low, p.high, p.unit};

  SimulationConfig sim;
  if (ast.sim.timestep_s) sim.timestep_s = *ast.sim.timestep_s;
  if (ast.sim.horizon_s) sim.horizon_s = *ast.sim.horizon_s;
  try {
    sim.validate();
  } catch (const std::exception& e) {
    diags.push_back({1, 1, e.what(), ParseDiagnostic::Severity::error});
    return result;
  }

  result.compiled = CompiledScenario{tmpl, std::move(ranges), sim};
  return result;
}

}  // namespace ccsearch::dsl
