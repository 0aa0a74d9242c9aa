#include "roadscene/command_dsl.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <map>
#include <regex>
#include <set>

#include "roadscene/asset_bank.hpp"
#include "roadscene/error.hpp"

#ifdef ROADSCENE_WITH_REMOTE
#include <httplib.h>
#endif

namespace roadscene {
namespace {

using nlohmann::json;

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n,");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n,");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> words_of(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

// Lowercase; keeps letters, digits and the characters used by numbers and
// units ('.', '/', '-'); everything else becomes a space.
std::string normalize(std::string_view s) {
  std::string out;
  bool space = true;
  for (char ch : s) {
    const unsigned char c = static_cast<unsigned char>(std::tolower(static_cast<unsigned char>(ch)));
    if (std::isalnum(c) || c == '.' || c == '/' || c == '-') {
      out += static_cast<char>(c);
      space = false;
    } else if (!space) {
      out += ' ';
      space = true;
    }
  }
  while (!out.empty() && (out.back() == ' ' || out.back() == '.')) out.pop_back();
  return out;
}

const std::set<std::string>& fillers() {
  static const std::set<std::string> s = {"please", "now", "then", "also", "additionally", "and", "finally",
                                          "first", "next", "afterwards", "lastly", "plus", "so", "moreover"};
  return s;
}

const std::set<std::string>& delete_verbs() {
  static const std::set<std::string> s = {"remove", "delete", "erase", "clear", "eliminate", "drop"};
  return s;
}
const std::set<std::string>& add_verbs() {
  static const std::set<std::string> s = {"add", "put", "place", "insert", "spawn", "introduce"};
  return s;
}
const std::set<std::string>& revise_verbs() {
  static const std::set<std::string> s = {"modify", "change", "make", "let", "paint", "repaint",
                                          "recolor", "recolour", "set", "have", "alter"};
  return s;
}
const std::set<std::string>& abstract_verbs() {
  static const std::set<std::string> s = {"create", "make", "generate", "simulate", "build", "form", "produce",
                                          "cause", "start"};
  return s;
}
const std::set<std::string>& view_verbs() {
  static const std::set<std::string> s = {"move", "shift", "rotate", "raise", "lower", "pan", "tilt", "lift",
                                          "translate", "roll", "turn"};
  return s;
}

bool starts_instruction(const std::vector<std::string>& w, std::size_t j) {
  if (j >= w.size()) return false;
  const std::string x = lower(w[j]);
  if (delete_verbs().count(x) || add_verbs().count(x) || revise_verbs().count(x) || abstract_verbs().count(x))
    return true;
  if (x == "move" || x == "shift" || x == "rotate" || x == "raise" || x == "lower" || x == "pan" || x == "tilt")
    return true;
  if (x == "view" || x == "camera" || x == "ego") return true;
  if (x == "the" && j + 1 < w.size()) {
    const std::string y = lower(w[j + 1]);
    return y == "view" || y == "camera" || y == "ego";
  }
  return false;
}

// ---- lexicons ----------------------------------------------------------

const char* kVehicleAlt =
    "police\\s+cars?|police\\s+cruisers?|cop\\s+cars?|porsches?|mini\\s+coopers?|minis?|chevrolets?|chevys?|"
    "audis?|trucks?|lorry|lorries|buses|bus|vans?|suvs?|sedans?|cars|car|vehicles|vehicle";

const std::string& color_alt() {
  static const std::string alt = [] {
    std::string s;
    for (const auto& n : color_names()) s += (s.empty() ? "" : "|") + n;
    return s;
  }();
  return alt;
}

const std::string& ref_pattern() {
  static const std::string p = std::string("the\\s+(?:(added|new|inserted)\\s+)?(?:(") + color_alt() + ")\\s+)?(" +
                               kVehicleAlt + ")\\b";
  return p;
}

std::string canonical_or_throw(const std::string& word) {
  auto t = canonical_vehicle_type(word);
  if (!t) throw Error(ErrorCode::kParse, "unknown vehicle word '" + word + "'");
  return *t;
}

std::string reference_text(bool added, const std::string& color, const std::string& vehicle_word) {
  std::string s = "the ";
  if (added) s += "added ";
  if (!color.empty()) s += color + " ";
  return s + canonical_or_throw(vehicle_word);
}

struct Hit {
  std::size_t pos = 0;
  std::size_t len = 0;
  std::vector<std::string> groups;  // groups[0] = whole match; unmatched = ""
};

std::optional<Hit> find(const std::string& s, const std::regex& re) {
  std::smatch m;
  if (!std::regex_search(s, m, re)) return std::nullopt;
  Hit h;
  h.pos = static_cast<std::size_t>(m.position(0));
  h.len = static_cast<std::size_t>(m.length(0));
  for (std::size_t i = 0; i < m.size(); ++i) h.groups.push_back(m[i].matched ? m[i].str() : std::string());
  return h;
}

std::vector<Hit> find_all(const std::string& s, const std::regex& re) {
  std::vector<Hit> out;
  for (auto it = std::sregex_iterator(s.begin(), s.end(), re); it != std::sregex_iterator(); ++it) {
    Hit h;
    h.pos = static_cast<std::size_t>(it->position(0));
    h.len = static_cast<std::size_t>(it->length(0));
    for (std::size_t i = 0; i < it->size(); ++i) h.groups.push_back((*it)[i].matched ? (*it)[i].str() : "");
    out.push_back(std::move(h));
  }
  return out;
}

void blank(std::string& s, const Hit& h) { std::fill(s.begin() + h.pos, s.begin() + h.pos + h.len, ' '); }

std::regex rx(const std::string& p) { return std::regex(p, std::regex::ECMAScript | std::regex::optimize); }

struct ModifierRule {
  std::regex re;
  const char* canonical;
};

const std::vector<ModifierRule>& modifier_rules() {
  static const std::vector<ModifierRule> rules = [] {
    std::vector<ModifierRule> r;
    r.push_back({rx("\\bwrong[\\s-]+(?:way|direction)\\b|\\bagainst\\s+(?:the\\s+)?traffic\\b"), "wrong way"});
    r.push_back({rx("\\btowards?\\s+(?:me|us|the\\s+ego(?:\\s+(?:vehicle|car))?|the\\s+camera)\\b|\\boncoming\\b"),
                 "toward me"});
    r.push_back({rx("\\baway\\s+from\\s+(?:me|us|the\\s+ego(?:\\s+(?:vehicle|car))?|the\\s+camera)\\b|"
                    "\\bin\\s+the\\s+same\\s+direction\\b"),
                 "away from me"});
    r.push_back({rx("\\bat\\s+(?:a\\s+)?(?:normal|moderate|medium|regular)\\s+speed\\b"), "normal speed"});
    r.push_back({rx("\\b(?:fast|quickly|rapidly|speeding|faster)\\b|\\bat\\s+(?:a\\s+)?high\\s+speed\\b"), "fast"});
    r.push_back({rx("\\b(?:slow|slowly|slower)\\b|\\bat\\s+(?:a\\s+)?low\\s+speed\\b"), "slow"});
    r.push_back({rx("\\b(?:turn|turns|turning)\\s+(?:to\\s+the\\s+)?left\\b|\\bleft\\s+turn\\b"), "turn left"});
    r.push_back({rx("\\b(?:turn|turns|turning)\\s+(?:to\\s+the\\s+)?right\\b|\\bright\\s+turn\\b"), "turn right"});
    r.push_back({rx("\\b(?:park|parks|parked|parking|stationary|stopped)\\b"), "park"});
    r.push_back({rx("\\b(?:backwards?|reversing|reverses|in\\s+reverse)\\b"), "backward"});
    r.push_back({rx("\\b(?:moving|driving|going|heading|travell?ing|cruising|drives|moves|goes|drive|move|go)"
                    "\\s+(?:straight\\s+)?(?:ahead|forwards?|straight)\\b|\\bstraight\\b"),
                 "straight"});
    r.push_back({rx("\\b(?:chasing|chases|chase|following|follows|follow|pursuing|pursues)\\b"), "chasing"});
    r.push_back({rx("\\b(?:close|near|nearby)\\b"), "close"});
    r.push_back({rx("\\b(?:far|distant)\\b"), "far"});
    return r;
  }();
  return rules;
}

// Canonical words understood by extract_motion_attributes.
const std::set<std::string>& known_modifiers() {
  static const std::set<std::string> s = {"wrong way", "toward me", "away from me", "normal speed", "fast",
                                          "slow",      "turn left", "turn right",   "park",         "backward",
                                          "straight",  "chasing",   "close",        "far"};
  return s;
}

// Collects modifiers in order of appearance and blanks their spans.
json take_modifiers(std::string& s) {
  std::vector<std::pair<std::size_t, std::string>> found;
  for (const auto& rule : modifier_rules()) {
    auto hits = find_all(s, rule.re);
    if (hits.empty()) continue;
    found.emplace_back(hits.front().pos, rule.canonical);
    for (const auto& h : hits) blank(s, h);
  }
  std::sort(found.begin(), found.end());
  json out = json::array();
  for (const auto& [pos, name] : found) out.push_back(name);
  return out;
}

double number(const std::string& s) { return std::stod(s); }

// Explicit speed / duration / distance quantities; blanks what it consumes.
void take_quantities(std::string& s, json& p, bool allow_distance) {
  static const std::regex speed_re = rx(
      "\\bat\\s+(\\d+(?:\\.\\d+)?)\\s*(m/s|mps|meters?\\s+per\\s+second|metres?\\s+per\\s+second|km/h|kmh|kph|"
      "kilometers?\\s+per\\s+hour|mph|miles\\s+per\\s+hour)");
  static const std::regex duration_re = rx("\\bfor\\s+(\\d+(?:\\.\\d+)?)\\s*(?:s|secs?|seconds?)\\b");
  static const std::regex range_re = rx(
      "\\b(?:between\\s+)?(\\d+(?:\\.\\d+)?)\\s*(?:to|-|and)\\s*(\\d+(?:\\.\\d+)?)\\s*(?:m|meters?|metres?)\\b"
      "(?:\\s+away)?");
  static const std::regex within_re = rx("\\bwithin\\s+(\\d+(?:\\.\\d+)?)\\s*(?:m|meters?|metres?)\\b");
  static const std::regex single_re =
      rx("\\b(\\d+(?:\\.\\d+)?)\\s*(?:m|meters?|metres?)\\s+(?:away|ahead|in\\s+front|from\\s+me)\\b");
  if (auto h = find(s, speed_re)) {
    double v = number(h->groups[1]);
    const std::string& unit = h->groups[2];
    if (unit.find("k") == 0) v /= 3.6;
    else if (unit == "mph" || unit.find("miles") == 0) v *= 0.44704;
    p[param::kSpeed] = v;
    blank(s, *h);
  }
  if (auto h = find(s, duration_re)) {
    p[param::kDuration] = number(h->groups[1]);
    blank(s, *h);
  }
  if (!allow_distance) return;
  if (auto h = find(s, range_re)) {
    const double a = number(h->groups[1]);
    const double b = number(h->groups[2]);
    p[param::kDistanceMin] = std::min(a, b);
    p[param::kDistanceMax] = std::max(a, b);
    blank(s, *h);
  } else if (auto h2 = find(s, within_re)) {
    p[param::kDistanceMin] = 0.0;
    p[param::kDistanceMax] = number(h2->groups[1]);
    blank(s, *h2);
  } else if (auto h3 = find(s, single_re)) {
    const double d = number(h3->groups[1]);
    p[param::kDistanceMin] = std::max(0.0, d - 5.0);
    p[param::kDistanceMax] = d + 5.0;
    blank(s, *h3);
  }
}

std::optional<std::string> take_sector(std::string& s) {
  static const std::vector<std::pair<std::regex, const char*>> rules = {
      {rx("\\b(?:left[\\s-]+front|front[\\s-]+left)\\b"), "left_front"},
      {rx("\\b(?:right[\\s-]+front|front[\\s-]+right)\\b"), "right_front"},
      {rx("\\bbehind\\s+(?:me|us|the\\s+ego(?:\\s+(?:vehicle|car))?)\\b|\\b(?:at|in)\\s+the\\s+(?:back|rear)\\b|"
          "\\bbehind\\b"),
       "back"},
      {rx("\\b(?:on|to|at)\\s+(?:the|my)\\s+left\\b|\\bleft\\s+(?:side|lane)\\b"), "left"},
      {rx("\\b(?:on|to|at)\\s+(?:the|my)\\s+right\\b|\\bright\\s+(?:side|lane)\\b"), "right"},
      {rx("\\bin\\s+front\\b|\\b(?:to|in|at)\\s+the\\s+front\\b|\\bahead\\s+of\\s+(?:me|us)\\b|\\bfront\\b|\\bahead\\b"),
       "front"},
  };
  for (const auto& [re, name] : rules)
    if (auto h = find(s, re)) {
      blank(s, *h);
      return std::string(name);
    }
  return std::nullopt;
}

struct RelationHit {
  std::string relation;
  std::string reference;
};

std::optional<RelationHit> take_relation(std::string& s) {
  static const std::regex positional = rx(
      "\\b(behind|in\\s+front\\s+of|to\\s+the\\s+front\\s+of|ahead\\s+of|to\\s+the\\s+left\\s+of|"
      "on\\s+the\\s+left\\s+of|left\\s+of|to\\s+the\\s+right\\s+of|on\\s+the\\s+right\\s+of|right\\s+of)\\s+(" +
      ref_pattern() + ")");
  static const std::regex pursuit =
      rx("\\b(?:chasing|chases|following|follows|pursuing|pursues)\\s+(" + ref_pattern() + ")");
  if (auto h = find(s, positional)) {
    const std::string& rel = h->groups[1];
    std::string relation = "front";
    if (rel == "behind") relation = "behind";
    else if (rel.find("left") != std::string::npos) relation = "left";
    else if (rel.find("right") != std::string::npos) relation = "right";
    RelationHit out{relation, reference_text(!h->groups[3].empty(), h->groups[4], h->groups[5])};
    blank(s, *h);
    return out;
  }
  if (auto h = find(s, pursuit)) {
    RelationHit out{"behind", reference_text(!h->groups[2].empty(), h->groups[3], h->groups[4])};
    // Keep the verb visible so the chase modifier is still picked up.
    Hit ref = *h;
    ref.pos = h->pos + h->groups[0].find(h->groups[1]);
    ref.len = h->groups[1].size();
    blank(s, ref);
    return out;
  }
  return std::nullopt;
}

std::optional<RelationHit> take_reference(std::string& s) {
  static const std::regex re = rx("\\b" + ref_pattern());
  if (auto h = find(s, re)) {
    RelationHit out{"", reference_text(!h->groups[1].empty(), h->groups[2], h->groups[3])};
    blank(s, *h);
    return out;
  }
  return std::nullopt;
}

std::optional<int> count_word(const std::string& w) {
  static const std::map<std::string, int> m = {
      {"a", 1},     {"an", 1},    {"one", 1},   {"another", 1}, {"single", 1}, {"two", 2},
      {"three", 3}, {"four", 4},  {"five", 5},  {"six", 6},     {"seven", 7},  {"eight", 8},
      {"nine", 9},  {"ten", 10},  {"couple", 2}};
  if (auto it = m.find(w); it != m.end()) return it->second;
  if (!w.empty() && std::all_of(w.begin(), w.end(), [](unsigned char c) { return std::isdigit(c); }))
    return std::stoi(w);
  return std::nullopt;
}

struct VehicleHit {
  std::string type;
  std::optional<std::string> color;
  std::optional<int> count;
  bool plural = false;
};

std::optional<VehicleHit> take_vehicle(std::string& s) {
  static const std::regex re = rx(std::string("\\b(") + kVehicleAlt + ")\\b");
  auto h = find(s, re);
  if (!h) return std::nullopt;
  VehicleHit out;
  out.type = canonical_or_throw(h->groups[1]);
  const std::string& word = h->groups[1];
  out.plural = word.back() == 's' && word != "bus" && word != "chevys";
  auto before = words_of(s.substr(0, h->pos));
  const std::size_t lo = before.size() > 3 ? before.size() - 3 : 0;
  for (std::size_t i = before.size(); i-- > lo;) {
    if (!out.color && color_from_name(before[i])) out.color = before[i];
    if (!out.count)
      if (auto n = count_word(before[i])) out.count = *n;
  }
  blank(s, *h);
  return out;
}

std::optional<std::string> take_color(std::string& s) {
  static const std::regex re = rx("\\b(" + color_alt() + ")\\b");
  if (auto h = find(s, re)) {
    blank(s, *h);
    return h->groups[1];
  }
  return std::nullopt;
}

[[noreturn]] void parse_fail(const std::string& clause, const std::string& rule, const std::string& why) {
  throw Error(ErrorCode::kParse, "cannot parse clause '" + clause + "': " + why + " (nearest rule: " + rule + ")",
              {{"clause", clause}, {"nearest_rule", rule}, {"reason", why}});
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::string nearest_rule(const std::string& verb) {
  static const std::vector<std::pair<const char*, std::vector<const char*>>> rules = {
      {"delete", {"remove", "delete", "erase", "clear"}},
      {"add", {"add", "put", "place", "insert", "spawn"}},
      {"view_change", {"move", "shift", "rotate", "raise", "lower", "view", "camera", "ego"}},
      {"revise", {"modify", "change", "make", "let", "paint", "recolor"}},
      {"abstract_expand", {"create", "generate", "simulate", "build"}},
  };
  std::string best = "add";
  std::size_t best_d = std::string::npos;
  for (const auto& [name, keys] : rules)
    for (const char* k : keys) {
      const std::size_t d = edit_distance(verb, k);
      if (d < best_d) {
        best_d = d;
        best = name;
      }
    }
  return best;
}

// ---- rules -------------------------------------------------------------

struct Clause {
  std::string original;
  std::string body;  // normalized, fillers stripped
  std::string verb;
};

EditConfig make_config(EditAction a, int round) {
  EditConfig c;
  c.action = a;
  c.round = round;
  return c;
}

EditConfig parse_ego(const Clause& cl, int round) {
  static const std::regex move_re = rx(
      "\\b(?:drive|drives|driving|move|moves|moving|go|goes|going|travel|travels|cruise|cruises|proceed|proceeds|"
      "advance|advances|continue|continues)\\b");
  static const std::regex stop_re = rx("\\b(?:stop|stops|stopped|stay|stays|halt|halts|wait|waits)\\b|\\bstands\\s+still\\b");
  static const std::regex speed_re = rx("\\bat\\s+(\\d+(?:\\.\\d+)?)\\s*(m/s|km/h|kmh|kph|mph)");
  const SpeedLexicon lex;
  EditConfig c = make_config(EditAction::kViewChange, round);
  std::string s = cl.body;
  if (auto h = find(s, speed_re)) {
    double v = number(h->groups[1]);
    if (h->groups[2][0] == 'k') v /= 3.6;
    else if (h->groups[2] == "mph") v *= 0.44704;
    c.parameters[param::kEgoSpeed] = v;
    return c;
  }
  if (find(s, stop_re)) {
    c.parameters[param::kEgoSpeed] = 0.0;
    return c;
  }
  if (!find(s, move_re)) parse_fail(cl.original, "view_change", "ego clause has no movement verb");
  const json mods = take_modifiers(s);
  double v = lex.normal;
  for (const auto& m : mods) {
    if (m == "fast") v = lex.fast;
    else if (m == "slow") v = lex.slow;
  }
  c.parameters[param::kEgoSpeed] = v;
  return c;
}

EditConfig parse_view(const Clause& cl, int round) {
  static const std::string dirs =
      "ahead|forwards?|backwards?|back|behind|left|right|upwards?|up|above|higher|downwards?|down|below|lower";
  static const std::regex amount_first =
      rx("(-?\\d+(?:\\.\\d+)?)\\s*(?:m|meters?|metres?)\\s+(?:to\\s+the\\s+|towards?\\s+the\\s+)?(" + dirs + ")\\b");
  static const std::regex dir_first = rx("\\b(" + dirs + ")\\s+(?:by\\s+)?(-?\\d+(?:\\.\\d+)?)\\s*(?:m|meters?|metres?)\\b");
  static const std::string angle_dirs =
      "left|right|upwards?|up|downwards?|down|clockwise|counterclockwise|counter-clockwise|anticlockwise";
  static const std::regex angle_first =
      rx("(-?\\d+(?:\\.\\d+)?)\\s*(?:degrees?|deg)\\s+(?:to\\s+the\\s+)?(" + angle_dirs + ")\\b");
  static const std::regex angle_dir_first =
      rx("\\b(" + angle_dirs + ")\\s+(?:by\\s+)?(-?\\d+(?:\\.\\d+)?)\\s*(?:degrees?|deg)\\b");
  static const std::regex raise_re = rx("\\b(raise|lift|elevate|lower)\\b.*?(\\d+(?:\\.\\d+)?)\\s*(?:m|meters?|metres?)\\b");

  std::string s = cl.body;
  std::map<std::string, double> acc;
  auto translate = [&](const std::string& dir, double v) {
    if (dir == "ahead" || dir.rfind("forward", 0) == 0) acc[param::kForward] += v;
    else if (dir == "back" || dir == "behind" || dir.rfind("backward", 0) == 0) acc[param::kForward] -= v;
    else if (dir == "left") acc[param::kLeft] += v;
    else if (dir == "right") acc[param::kLeft] -= v;
    else if (dir.rfind("up", 0) == 0 || dir == "above" || dir == "higher") acc[param::kUp] += v;
    else acc[param::kUp] -= v;
  };
  auto rotate = [&](const std::string& dir, double v) {
    if (dir == "left") acc[param::kYawDeg] += v;
    else if (dir == "right") acc[param::kYawDeg] -= v;
    else if (dir.rfind("up", 0) == 0) acc[param::kPitchDeg] -= v;
    else if (dir.rfind("down", 0) == 0) acc[param::kPitchDeg] += v;
    else if (dir == "clockwise") acc[param::kRollDeg] -= v;
    else acc[param::kRollDeg] += v;
  };
  for (const auto& h : find_all(s, angle_first)) rotate(h.groups[2], number(h.groups[1]));
  for (const auto& h : find_all(s, angle_first)) blank(s, h);
  for (const auto& h : find_all(s, angle_dir_first)) rotate(h.groups[1], number(h.groups[2]));
  for (const auto& h : find_all(s, angle_dir_first)) blank(s, h);
  for (const auto& h : find_all(s, amount_first)) translate(h.groups[2], number(h.groups[1]));
  for (const auto& h : find_all(s, amount_first)) blank(s, h);
  for (const auto& h : find_all(s, dir_first)) translate(h.groups[1], number(h.groups[2]));
  for (const auto& h : find_all(s, dir_first)) blank(s, h);
  if (auto h = find(s, raise_re)) translate(h->groups[1] == "lower" ? "down" : "up", number(h->groups[2]));
  if (acc.empty()) parse_fail(cl.original, "view_change", "no distance or angle given");
  EditConfig c = make_config(EditAction::kViewChange, round);
  for (const auto& [k, v] : acc) c.parameters[k] = v;
  return c;
}

std::string strip_location_tail(std::string s) {
  static const std::regex tail = rx(
      "\\s+(?:in|from|on|off)\\s+(?:the\\s+)?(?:scene|road|street|image|video|view|picture|frame)$|"
      "\\s+(?:in\\s+view|here|there)$");
  s = std::regex_replace(s, tail, "");
  return trim(s);
}

EditConfig parse_delete(const Clause& cl, int round) {
  EditConfig c = make_config(EditAction::kDelete, round);
  std::string rest = cl.body.substr(cl.verb.size());
  // "get rid of" is routed here with the verb already consumed.
  if (rest.rfind(" rid of", 0) == 0) rest = rest.substr(7);
  rest = strip_location_tail(trim(rest));
  if (rest.empty()) parse_fail(cl.original, "delete", "nothing to delete");
  c.target = rest;
  std::string s = " " + rest + " ";
  static const std::regex all_re = rx("\\b(?:all|every|each|everything|everyone)\\b");
  static const std::regex everything_re = rx("^\\s*(?:everything|the\\s+road|the\\s+scene|the\\s+street)\\s*$");
  if (std::regex_search(s, everything_re)) {
    c.parameters[param::kScope] = "all";
    return c;
  }
  if (auto r = take_reference(s); r && r->reference.find("added") != std::string::npos) {
    c.parameters[param::kReference] = r->reference;
    return c;
  }
  s = " " + rest + " ";
  const bool all = std::regex_search(s, all_re);
  auto vehicle = take_vehicle(s);
  auto color = vehicle && vehicle->color ? vehicle->color : take_color(s);
  auto sector = take_sector(s);
  if (!vehicle && !color) parse_fail(cl.original, "delete", "no vehicle named");
  c.parameters[param::kScope] = all ? "all" : "match";
  if (vehicle && !is_generic_vehicle_type(vehicle->type)) c.parameters[param::kType] = vehicle->type;
  if (color) c.parameters[param::kColor] = *color;
  if (sector) c.parameters[param::kSector] = *sector;
  return c;
}

EditConfig parse_add(const Clause& cl, int round) {
  EditConfig c = make_config(EditAction::kAdd, round);
  std::string s = " " + cl.body.substr(cl.verb.size()) + " ";
  json& p = c.parameters;
  if (auto r = take_relation(s)) {
    p[param::kRelation] = r->relation;
    p[param::kReference] = r->reference;
  }
  take_quantities(s, p, true);
  json mods = take_modifiers(s);
  auto vehicle = take_vehicle(s);
  if (!vehicle) parse_fail(cl.original, "add", "no vehicle named");
  if (auto sector = take_sector(s)) p[param::kSector] = *sector;
  p[param::kType] = vehicle->type;
  p[param::kCount] = vehicle->count.value_or(1);
  std::optional<std::string> color = vehicle->color;
  if (!color) color = take_color(s);
  if (color) p[param::kColor] = *color;
  if (!mods.empty()) p[param::kModifiers] = mods;
  return c;
}

EditConfig parse_revise(const Clause& cl, int round, const RelationHit& ref, std::string s) {
  EditConfig c = make_config(EditAction::kRevise, round);
  c.target = ref.reference;
  json& p = c.parameters;
  p[param::kReference] = ref.reference;
  static const std::regex into_re =
      rx("\\b(?:to|into)\\s+(?:a|an)\\s+(?:(" + color_alt() + ")\\s+)?(" + kVehicleAlt + ")\\b");
  if (auto h = find(s, into_re)) {
    const std::string t = canonical_or_throw(h->groups[2]);
    if (!is_generic_vehicle_type(t)) p[param::kType] = t;
    if (!h->groups[1].empty()) p[param::kColor] = h->groups[1];
    blank(s, *h);
  }
  take_quantities(s, p, true);
  json mods = take_modifiers(s);
  if (!p.contains(param::kColor))
    if (auto color = take_color(s)) p[param::kColor] = *color;
  if (!mods.empty()) p[param::kModifiers] = mods;
  if (p.size() == 1) parse_fail(cl.original, "revise", "no change requested");
  return c;
}

EditConfig parse_abstract(const Clause& cl, int round) {
  EditConfig c = make_config(EditAction::kAbstractExpand, round);
  std::string rest = trim(cl.body.substr(cl.verb.size()));
  static const std::regex count_re = rx("\\s+with\\s+(\\d+|two|three|four|five|six|seven|eight|nine|ten)\\s+(?:" +
                                        std::string(kVehicleAlt) + ")$");
  if (auto h = find(rest, count_re)) {
    c.parameters[param::kCount] = *count_word(h->groups[1]);
    rest = rest.substr(0, h->pos);
  }
  static const std::regex article = rx("^(?:a|an|the|some)\\s+");
  static const std::regex tail = rx("\\s+(?:ahead(?:\\s+of\\s+(?:me|us))?|in\\s+front(?:\\s+of\\s+(?:me|us))?|"
                                    "on\\s+the\\s+road|here|in\\s+the\\s+scene)$");
  rest = std::regex_replace(rest, article, "");
  rest = trim(std::regex_replace(rest, tail, ""));
  if (rest.empty()) parse_fail(cl.original, "abstract_expand", "no phrase to expand");
  c.parameters[param::kPhrase] = rest;
  return c;
}

EditConfig parse_clause(const std::string& original, int round) {
  std::vector<std::string> w = words_of(normalize(original));
  std::size_t i = 0;
  while (i < w.size() && fillers().count(w[i])) ++i;
  if (i == w.size()) parse_fail(original, "add", "empty clause");
  Clause cl;
  cl.original = original;
  for (std::size_t k = i; k < w.size(); ++k) cl.body += (cl.body.empty() ? "" : " ") + w[k];
  cl.verb = w[i];

  static const std::regex ego_re = rx("^(?:the\\s+)?(?:ego(?:\\s+(?:vehicle|car))?|my\\s+car)\\b");
  static const std::regex view_re = rx("\\b(?:view|camera|viewpoint|perspective)\\b");
  if (std::regex_search(cl.body, ego_re)) return parse_ego(cl, round);
  if (delete_verbs().count(cl.verb) || (cl.verb == "get" && cl.body.rfind("get rid of", 0) == 0))
    return parse_delete(cl, round);
  if (std::regex_search(cl.body, view_re)) return parse_view(cl, round);
  if (add_verbs().count(cl.verb)) return parse_add(cl, round);
  if (revise_verbs().count(cl.verb) || cl.verb == "turn") {
    std::string s = " " + cl.body.substr(cl.verb.size()) + " ";
    if (auto ref = take_reference(s)) return parse_revise(cl, round, *ref, s);
  }
  if (abstract_verbs().count(cl.verb)) {
    // "create a red car" is an addition, not an abstraction.
    std::string s = " " + cl.body.substr(cl.verb.size()) + " ";
    static const std::regex np = rx("^\\s*(?:a|an|one|two|three|four|five|another)\\s+(?:(?:" + color_alt() +
                                    ")\\s+)?(?:" + kVehicleAlt + ")\\b");
    if (std::regex_search(s, np)) return parse_add(cl, round);
    return parse_abstract(cl, round);
  }
  if (view_verbs().count(cl.verb)) return parse_view(cl, round);
  parse_fail(original, nearest_rule(cl.verb), "no grammar rule starts with '" + cl.verb + "'");
}

// ---- motion attribute mapping ------------------------------------------

struct Slot {
  std::string name;
  std::vector<std::string> values;
  void add(const std::string& v) {
    if (std::find(values.begin(), values.end(), v) == values.end()) values.push_back(v);
  }
  void check() const {
    if (values.size() > 1)
      throw Error(ErrorCode::kAmbiguity, "conflicting values for " + name, {{"attribute", name}, {"values", values}});
  }
};

std::string fmt(double v) {
  json j = v;
  return j.dump();
}

void apply_config(MotionAttributes& a, const EditConfig& config, const SpeedLexicon& lex) {
  const json& p = config.parameters;
  Slot direction{"driving_direction", {}}, speed{"speed", {}}, motion{"motion", {}}, distance{"distance", {}},
      crazy{"crazy_mode", {}}, chase{"chase", {}};
  std::map<std::string, double> speed_value;
  std::map<std::string, std::pair<double, double>> distance_value;
  if (p.contains(param::kModifiers)) {
    for (const auto& m : p[param::kModifiers]) {
      const std::string w = m.get<std::string>();
      if (!known_modifiers().count(w))
        throw Error(ErrorCode::kInvalidArgument, "unknown modifier '" + w + "'", {{"modifier", w}});
      if (w == "wrong way") crazy.add("true");
      else if (w == "toward me") direction.add("toward_ego");
      else if (w == "away from me") direction.add("away_from_ego");
      else if (w == "fast") speed.add(fmt(lex.fast)), speed_value[fmt(lex.fast)] = lex.fast;
      else if (w == "normal speed") speed.add(fmt(lex.normal)), speed_value[fmt(lex.normal)] = lex.normal;
      else if (w == "slow") speed.add(fmt(lex.slow)), speed_value[fmt(lex.slow)] = lex.slow;
      else if (w == "turn left") motion.add("turn_left");
      else if (w == "turn right") motion.add("turn_right");
      else if (w == "park") motion.add("park");
      else if (w == "backward") motion.add("backward");
      else if (w == "straight") motion.add("straightforward");
      else if (w == "chasing") chase.add("true");
      else if (w == "close") distance.add("5-20"), distance_value["5-20"] = {5.0, 20.0};
      else if (w == "far") distance.add("40-80"), distance_value["40-80"] = {40.0, 80.0};
    }
  }
  if (p.contains(param::kCrazyMode)) crazy.add(p[param::kCrazyMode].get<bool>() ? "true" : "false");
  if (p.contains(param::kDrivingDirection)) direction.add(p[param::kDrivingDirection].get<std::string>());
  if (p.contains(param::kSpeed)) {
    const double v = p[param::kSpeed].get<double>();
    speed.add(fmt(v));
    speed_value[fmt(v)] = v;
  }
  if (p.contains(param::kMotion)) motion.add(p[param::kMotion].get<std::string>());
  if (p.contains(param::kChase)) chase.add(p[param::kChase].get<bool>() ? "true" : "false");
  if (p.contains(param::kDistanceMin) || p.contains(param::kDistanceMax)) {
    if (!p.contains(param::kDistanceMin) || !p.contains(param::kDistanceMax))
      throw Error(ErrorCode::kInvalidArgument, "distance_min and distance_max must be given together");
    const double lo = p[param::kDistanceMin].get<double>();
    const double hi = p[param::kDistanceMax].get<double>();
    const std::string key = fmt(lo) + "-" + fmt(hi);
    distance.add(key);
    distance_value[key] = {lo, hi};
  }
  for (const Slot* s : {&direction, &speed, &motion, &distance, &crazy, &chase}) s->check();

  if (!crazy.values.empty()) a.crazy_mode = crazy.values[0] == "true";
  if (!direction.values.empty()) a.driving_direction = driving_direction_from_string(direction.values[0]);
  if (!speed.values.empty()) a.speed = speed_value.at(speed.values[0]);
  if (!motion.values.empty()) {
    auto m = motion_action_from_string(motion.values[0]);
    if (!m) throw Error(ErrorCode::kInvalidArgument, "unknown motion '" + motion.values[0] + "'");
    a.action = *m;
  }
  if (!distance.values.empty()) a.distance_range = distance_value.at(distance.values[0]);
  if (!chase.values.empty()) a.chase = chase.values[0] == "true";
  if (p.contains(param::kDuration)) a.duration = p[param::kDuration].get<double>();
  if (!(a.speed >= 0.0) || !(a.duration > 0.0))
    throw Error(ErrorCode::kInvalidArgument, "speed must be >= 0 and duration > 0");
}

}  // namespace

std::vector<std::string> split_clauses(std::string_view text) {
  std::vector<std::string> sentences;
  std::string cur;
  auto flush = [&] {
    std::string t = trim(cur);
    if (!t.empty()) sentences.push_back(t);
    cur.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    bool boundary = c == '!' || c == '?' || c == ';' || c == '\n';
    if (c == '.') {
      const bool decimal = i > 0 && i + 1 < text.size() && std::isdigit(static_cast<unsigned char>(text[i - 1])) &&
                           std::isdigit(static_cast<unsigned char>(text[i + 1]));
      boundary = !decimal;
    }
    if (boundary) flush();
    else cur += c;
  }
  flush();
  if (sentences.empty()) throw Error(ErrorCode::kParse, "command is empty", {{"clause", ""}, {"nearest_rule", "add"}});

  static const std::set<std::string> connectives = {"and", "additionally", "also", "then", "plus"};
  static const std::set<std::string> skippable = {"then", "also", "please", "additionally"};
  std::vector<std::string> out;
  for (const auto& sentence : sentences) {
    // Word boundaries with byte offsets into the sentence.
    std::vector<std::pair<std::size_t, std::string>> words;
    for (std::size_t i = 0; i < sentence.size();) {
      while (i < sentence.size() && (std::isspace(static_cast<unsigned char>(sentence[i])) || sentence[i] == ','))
        ++i;
      const std::size_t b = i;
      while (i < sentence.size() && !std::isspace(static_cast<unsigned char>(sentence[i])) && sentence[i] != ',') ++i;
      if (i > b) words.emplace_back(b, lower(sentence.substr(b, i - b)));
    }
    std::vector<std::string> plain;
    for (const auto& [pos, w] : words) plain.push_back(w);
    std::size_t start = 0;
    for (std::size_t i = 1; i < words.size(); ++i) {
      if (!connectives.count(words[i].second)) continue;
      std::size_t j = i + 1;
      while (j < words.size() && skippable.count(words[j].second)) ++j;
      if (!starts_instruction(plain, j)) continue;
      std::string piece = trim(sentence.substr(start, words[i].first - start));
      if (!piece.empty()) out.push_back(piece);
      start = words[i].first;
      i = j;
    }
    std::string piece = trim(sentence.substr(start));
    if (!piece.empty()) out.push_back(piece);
  }
  return out;
}

std::vector<EditConfig> parse_command(const CommandText& text) {
  std::vector<EditConfig> out;
  for (const auto& clause : split_clauses(text.raw)) out.push_back(parse_clause(clause, text.round));
  for (const auto& c : out) {
    auto v = validate_edit_config(c);
    if (!v.empty())
      throw Error(ErrorCode::kParse, "clause produced an invalid config: " + v.front().message,
                  {{"clause", to_json(c)}, {"nearest_rule", std::string(to_string(c.action))}});
  }
  return out;
}

std::optional<std::string> canonical_vehicle_type(std::string_view word) {
  std::string w = lower(word);
  // Collapse internal whitespace runs.
  w = std::regex_replace(w, std::regex("\\s+"), " ");
  static const std::vector<std::pair<std::regex, const char*>> table = {
      {std::regex("^(police car|police cruiser|cop car)s?$"), "police car"},
      {std::regex("^porsches?$"), "Porsche"},
      {std::regex("^mini( cooper)?s?$"), "Mini"},
      {std::regex("^(chevrolet|chevy)s?$"), "Chevrolet"},
      {std::regex("^audis?$"), "Audi"},
      {std::regex("^(trucks?|lorry|lorries)$"), "truck"},
      {std::regex("^(bus|buses)$"), "bus"},
      {std::regex("^vans?$"), "van"},
      {std::regex("^suvs?$"), "SUV"},
      {std::regex("^(sedans?|cars?|vehicles?|autos?|automobiles?)$"), "car"},
  };
  for (const auto& [re, name] : table)
    if (std::regex_match(w, re)) return std::string(name);
  return std::nullopt;
}

MotionAttributes extract_motion_attributes(const EditConfig& config, const SpeedLexicon& lexicon) {
  if (config.action != EditAction::kAdd)
    throw Error(ErrorCode::kInvalidArgument,
                "motion attributes come from add configs, got " + std::string(to_string(config.action)));
  const json& p = config.parameters;
  MotionAttributes a;
  if (p.contains(param::kSector)) {
    auto s = sector_from_string(p[param::kSector].get<std::string>());
    if (!s) throw Error(ErrorCode::kInvalidArgument, "unknown sector");
    a.sector = *s;
  }
  if (p.contains(param::kRelation)) {
    a.relation = relation_from_string(p[param::kRelation].get<std::string>());
    if (!a.relation) throw Error(ErrorCode::kInvalidArgument, "unknown relation");
    if (!p.contains(param::kReference) && !p.contains(param::kReferenceId))
      throw Error(ErrorCode::kInvalidArgument, "relation given without a reference vehicle");
    a.driving_direction.reset();
  }
  if (p.contains(param::kReferenceId)) a.reference_id = p[param::kReferenceId].get<std::string>();
  apply_config(a, config, lexicon);
  return a;
}

MotionAttributes merge_motion_attributes(const MotionAttributes& base, const EditConfig& config,
                                         const SpeedLexicon& lexicon) {
  MotionAttributes a = base;
  apply_config(a, config, lexicon);
  return a;
}

bool has_motion_change(const EditConfig& config) {
  const json& p = config.parameters;
  for (const char* k : {param::kCrazyMode, param::kDrivingDirection, param::kDistanceMin, param::kDistanceMax,
                        param::kSpeed, param::kMotion, param::kDuration, param::kChase})
    if (p.contains(k)) return true;
  return p.contains(param::kModifiers) && !p[param::kModifiers].empty();
}

bool sets_speed(const EditConfig& config) {
  const json& p = config.parameters;
  if (p.contains(param::kSpeed)) return true;
  if (!p.contains(param::kModifiers)) return false;
  for (const auto& m : p[param::kModifiers])
    if (m == "fast" || m == "slow" || m == "normal speed") return true;
  return false;
}

json to_json(const MotionAttributes& a) {
  json j;
  j["distance_range"] = a.distance_range ? json{a.distance_range->first, a.distance_range->second} : json(nullptr);
  j["sector"] = to_string(a.sector);
  j["driving_direction"] = a.driving_direction ? json(to_string(*a.driving_direction)) : json(nullptr);
  j["crazy_mode"] = a.crazy_mode;
  j["relation"] = a.relation ? json(to_string(*a.relation)) : json(nullptr);
  j["reference_id"] = a.reference_id;
  j["chase"] = a.chase;
  j["speed"] = a.speed;
  j["action"] = to_string(a.action);
  j["duration"] = a.duration;
  return j;
}

MotionAttributes motion_attributes_from_json(const json& j) {
  MotionAttributes a;
  try {
    if (j.contains("distance_range") && !j["distance_range"].is_null())
      a.distance_range = std::make_pair(j["distance_range"][0].get<double>(), j["distance_range"][1].get<double>());
    if (j.contains("sector")) a.sector = sector_from_string(j["sector"].get<std::string>()).value();
    if (j.contains("driving_direction"))
      a.driving_direction = j["driving_direction"].is_null()
                                ? std::nullopt
                                : driving_direction_from_string(j["driving_direction"].get<std::string>());
    a.crazy_mode = j.value("crazy_mode", false);
    if (j.contains("relation") && !j["relation"].is_null())
      a.relation = relation_from_string(j["relation"].get<std::string>()).value();
    a.reference_id = j.value("reference_id", "");
    a.chase = j.value("chase", false);
    a.speed = j.value("speed", 8.0);
    if (j.contains("action")) a.action = motion_action_from_string(j["action"].get<std::string>()).value();
    a.duration = j.value("duration", 4.0);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kSchemaViolation, std::string("bad motion attributes: ") + e.what());
  }
  return a;
}

namespace {

struct ParsedRef {
  bool added = false;
  std::optional<std::string> color;
  std::string type;
};

ParsedRef parse_reference(std::string_view expr) {
  static const std::regex re = rx("^\\s*" + ref_pattern() + "\\s*$");
  const std::string e = lower(expr);
  std::smatch m;
  if (!std::regex_match(e, m, re))
    throw Error(ErrorCode::kUnresolvedReference, "cannot read reference '" + std::string(expr) + "'",
                {{"reference", std::string(expr)}, {"candidates", json::array()}});
  ParsedRef r;
  r.added = m[1].matched;
  if (m[2].matched) r.color = m[2].str();
  r.type = canonical_or_throw(m[3].str());
  return r;
}

struct LiveAddition {
  std::string id;
  std::string asset_type;
  std::string requested_type;
  std::string color;
};

std::vector<LiveAddition> live_additions(const std::vector<EditConfig>& history) {
  std::vector<LiveAddition> live;
  for (const auto& c : history) {
    const json& p = c.parameters;
    if (c.action == EditAction::kAdd && p.contains(param::kInstanceIds)) {
      const auto& ids = p[param::kInstanceIds];
      for (std::size_t i = 0; i < ids.size(); ++i) {
        LiveAddition a;
        a.id = ids[i].get<std::string>();
        if (p.contains(param::kAssetTypes) && i < p[param::kAssetTypes].size())
          a.asset_type = p[param::kAssetTypes][i].get<std::string>();
        a.requested_type = p.value(param::kType, "");
        a.color = p.value(param::kColor, "");
        live.push_back(std::move(a));
      }
    } else if (c.action == EditAction::kDelete && p.contains(param::kTargetIds)) {
      for (const auto& id : p[param::kTargetIds])
        live.erase(std::remove_if(live.begin(), live.end(), [&](const LiveAddition& a) { return a.id == id; }),
                   live.end());
    } else if (c.action == EditAction::kRevise && p.contains(param::kTargetIds)) {
      for (const auto& id : p[param::kTargetIds])
        for (auto& a : live)
          if (a.id == id) {
            if (p.contains(param::kType)) a.requested_type = a.asset_type = p[param::kType].get<std::string>();
            if (p.contains(param::kAssetTypes) && !p[param::kAssetTypes].empty())
              a.asset_type = p[param::kAssetTypes][0].get<std::string>();
            if (p.contains(param::kColor)) a.color = p[param::kColor].get<std::string>();
          }
    }
  }
  return live;
}

bool type_matches(const std::string& want, const std::string& have) {
  return is_generic_vehicle_type(want) || lower(want) == lower(have);
}

[[noreturn]] void unresolved(std::string_view expr, const json& candidates) {
  throw Error(ErrorCode::kUnresolvedReference, "no vehicle matches '" + std::string(expr) + "'",
              {{"reference", std::string(expr)}, {"candidates", candidates}});
}

std::optional<std::string> resolve_in_history(const ParsedRef& r, const std::vector<EditConfig>& history,
                                              json& candidates) {
  const auto live = live_additions(history);
  for (const auto& a : live) candidates.push_back({{"id", a.id}, {"type", a.asset_type}});
  for (auto it = live.rbegin(); it != live.rend(); ++it) {
    if (!type_matches(r.type, it->asset_type) && !type_matches(r.type, it->requested_type)) continue;
    if (r.color && lower(it->color) != *r.color) continue;
    return it->id;
  }
  return std::nullopt;
}

}  // namespace

std::string resolve_reference(std::string_view expr, const std::vector<EditConfig>& history) {
  const ParsedRef r = parse_reference(expr);
  json candidates = json::array();
  if (auto id = resolve_in_history(r, history, candidates)) return *id;
  unresolved(expr, candidates);
}

bool vehicle_matches(const PlacedVehicle& v, const std::optional<std::string>& type,
                     const std::optional<std::string>& color) {
  const json& at = v.attributes;
  if (type && !is_generic_vehicle_type(*type)) {
    const std::string have = at.contains("type") && at["type"].is_string() ? at["type"].get<std::string>() : "";
    if (lower(have) != lower(*type)) return false;
  }
  if (color) {
    if (!at.contains("color")) return false;
    const json& c = at["color"];
    std::string name;
    if (c.is_string()) name = lower(c.get<std::string>());
    else if (c.is_array() && c.size() == 3)
      name = nearest_color_name(Rgb(c[0].get<double>(), c[1].get<double>(), c[2].get<double>()));
    if (name == "grey") name = "gray";
    std::string want = lower(*color);
    if (want == "grey") want = "gray";
    if (name != want) return false;
  }
  return true;
}

std::string resolve_reference(std::string_view expr, const SceneState& state) {
  const ParsedRef r = parse_reference(expr);
  json candidates = json::array();
  if (auto id = resolve_in_history(r, state.history, candidates)) return *id;
  if (!r.added) {
    const PlacedVehicle* best = nullptr;
    double best_d = 0.0;
    for (const auto& v : state.vehicles) {
      if (v.is_added()) continue;
      candidates.push_back({{"id", v.instance_id}, {"type", v.attributes.value("type", "")}});
      if (!vehicle_matches(v, r.type, r.color)) continue;
      const double d = std::hypot(v.pose.x, v.pose.y);
      if (!best || d < best_d) {
        best = &v;
        best_d = d;
      }
    }
    if (best) return best->instance_id;
  }
  unresolved(expr, candidates);
}

std::string remote_prompt() {
  return "Decompose the driving-scene editing command into a JSON object {\"configs\": [...]}. Emit one config per "
         "clause, in order. Each config has action (add, delete, view_change, revise, abstract_expand), target "
         "(string or null), parameters and round. Use only the parameter keys allowed by the schema for the "
         "action. Put speed, direction and motion words in parameters.modifiers using the canonical words: wrong "
         "way, toward me, away from me, fast, normal speed, slow, turn left, turn right, park, backward, straight, "
         "chasing, close, far.";
}

std::vector<EditConfig> remote_interpret(const CommandText& text, const InterpreterBackend& backend) {
#ifndef ROADSCENE_WITH_REMOTE
  (void)text;
  (void)backend;
  throw Error(ErrorCode::kTransport, "built without the remote interpreter");
#else
  static const std::regex url_re("^(https?)://([^/:]+)(?::(\\d+))?(/.*)?$");
  std::smatch m;
  if (!std::regex_match(backend.endpoint, m, url_re))
    throw Error(ErrorCode::kInvalidArgument, "bad endpoint URL '" + backend.endpoint + "'");
  if (m[1].str() == "https") throw Error(ErrorCode::kTransport, "https endpoints are not supported");
  const std::string host = m[2].str();
  const int port = m[3].matched ? std::stoi(m[3].str()) : 80;
  const std::string path = m[4].matched ? m[4].str() : "/";

  httplib::Client cli(host, port);
  const auto secs = std::chrono::duration<double>(backend.timeout);
  const auto us = std::chrono::duration_cast<std::chrono::microseconds>(secs);
  cli.set_connection_timeout(us);
  cli.set_read_timeout(us);
  cli.set_write_timeout(us);

  const json request = {{"prompt", remote_prompt()}, {"command", text.raw}, {"round", text.round},
                        {"schema", edit_config_json_schema()}};
  const auto t0 = std::chrono::steady_clock::now();
  auto res = cli.Post(path, request.dump(), "application/json");
  if (!res) {
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto err = res.error();
    const bool timed_out = err == httplib::Error::ConnectionTimeout ||
                           ((err == httplib::Error::Read || err == httplib::Error::Write) &&
                            elapsed >= 0.9 * backend.timeout);
    if (timed_out)
      throw Error(ErrorCode::kTimeout, "interpreter did not answer within " + fmt(backend.timeout) + " s",
                  {{"endpoint", backend.endpoint}});
    throw Error(ErrorCode::kTransport, "interpreter request failed: " + httplib::to_string(err),
                {{"endpoint", backend.endpoint}});
  }
  if (res->status != 200)
    throw Error(ErrorCode::kTransport, "interpreter answered HTTP " + std::to_string(res->status),
                {{"endpoint", backend.endpoint}, {"status", res->status}});
  json body;
  try {
    body = json::parse(res->body);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchemaViolation, std::string("interpreter response is not JSON: ") + e.what(),
                {{"violations", json::array({{{"field", "response"}, {"rule", "json"}, {"message", e.what()}}})}});
  }
  if (!body.is_object() || !body.contains("configs") || !body["configs"].is_array())
    throw Error(ErrorCode::kSchemaViolation, "interpreter response lacks a configs array",
                {{"violations",
                  json::array({{{"field", "configs"}, {"rule", "required"}, {"message", "missing configs array"}}})}});
  std::vector<Violation> violations;
  const auto& configs = body["configs"];
  for (std::size_t i = 0; i < configs.size(); ++i) {
    auto v = validate_edit_config_json(configs[i], "configs[" + std::to_string(i) + "]");
    violations.insert(violations.end(), v.begin(), v.end());
  }
  if (!violations.empty()) {
    json list = json::array();
    std::string fields;
    for (const auto& v : violations) {
      list.push_back({{"field", v.field}, {"rule", v.rule}, {"message", v.message}});
      fields += (fields.empty() ? "" : ", ") + v.field;
    }
    throw Error(ErrorCode::kSchemaViolation, "interpreter response violates the command schema: " + fields,
                {{"violations", list}});
  }
  std::vector<EditConfig> out;
  for (const auto& c : configs) out.push_back(edit_config_from_json(c));
  return out;
#endif
}

std::vector<EditConfig> interpret(const CommandText& text, const InterpreterBackend& backend) {
  if (backend.kind == InterpreterBackend::Kind::kRemoteModel) return remote_interpret(text, backend);
  return parse_command(text);
}

}  // namespace roadscene
