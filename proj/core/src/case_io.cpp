#include "feedopt/case_io.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "feedopt/error.hpp"

namespace feedopt {

namespace {

using nlohmann::json;

[[noreturn]] void parse_fail(const std::string& what) { throw Error(ErrorCode::kParseError, what); }

const json& field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) parse_fail(where + " must be an object");
  const auto it = obj.find(key);
  if (it == obj.end()) parse_fail("missing required field '" + std::string(key) + "' in " + where);
  return *it;
}

double number(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_number()) parse_fail("field '" + std::string(key) + "' in " + where + " must be a number");
  return v.get<double>();
}

int integer(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_number_integer()) {
    parse_fail("field '" + std::string(key) + "' in " + where + " must be an integer");
  }
  return v.get<int>();
}

double number_or(const json& obj, const char* key, double fallback, const std::string& where) {
  return obj.contains(key) ? number(obj, key, where) : fallback;
}

Vector vector_of(const json& v, const std::string& where) {
  if (!v.is_array()) parse_fail(where + " must be an array of numbers");
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) parse_fail(where + " must be an array of numbers");
    out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
  }
  return out;
}

const json& array_field(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_array()) parse_fail("field '" + std::string(key) + "' in " + where + " must be an array");
  return v;
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    parse_fail(std::string("malformed document: ") + e.what());
  }
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) parse_fail("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

grid::GridCase parse_grid_case(const std::string& text) {
  const json doc = parse_json(text);
  if (!doc.is_object()) parse_fail("case document must be an object");

  grid::GridCase out;
  const json& buses = array_field(doc, "buses", "case");
  for (std::size_t i = 0; i < buses.size(); ++i) {
    const std::string where = "buses[" + std::to_string(i) + "]";
    const json& b = buses[i];
    grid::Bus bus;
    bus.id = integer(b, "id", where);
    bus.inertia_s = number(b, "inertia_s", where);
    bus.damping_pu = number(b, "damping_pu", where);
    bus.gov_time_s = number(b, "gov_time_s", where);
    bus.droop_hz_per_pu = number(b, "droop_hz_per_pu", where);
    bus.load_pu = number(b, "load_pu", where);
    bus.gen_min_pu = number(b, "gen_min_pu", where);
    bus.gen_max_pu = number(b, "gen_max_pu", where);
    bus.cost_quadratic = number_or(b, "cost_quadratic", 0.0, where);
    bus.cost_linear = number_or(b, "cost_linear", 0.0, where);
    out.buses.push_back(bus);
  }

  const json& lines = array_field(doc, "lines", "case");
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string where = "lines[" + std::to_string(i) + "]";
    const json& l = lines[i];
    grid::Line line;
    line.from = integer(l, "from", where);
    line.to = integer(l, "to", where);
    line.susceptance_pu = number(l, "susceptance_pu", where);
    line.rating_pu = number(l, "rating_pu", where);
    out.lines.push_back(line);
  }

  if (const auto it = doc.find("penalty"); it != doc.end()) {
    const grid::PenaltyWeights defaults;
    out.weights.generation = number_or(*it, "generation", defaults.generation, "penalty");
    out.weights.line = number_or(*it, "line", defaults.line, "penalty");
    out.weights.frequency = number_or(*it, "frequency", defaults.frequency, "penalty");
  }

  grid::validate(out);
  return out;
}

grid::GridCase load_grid_case(const std::filesystem::path& path) {
  return parse_grid_case(read_text_file(path));
}

Scenario parse_scenario(const std::string& text, const grid::GridCase& grid) {
  const json doc = parse_json(text);
  if (!doc.is_object()) parse_fail("scenario document must be an object");
  const std::string where = "scenario";

  Scenario s;
  s.duration_s = number(doc, "duration_s", where);
  s.step_s = number(doc, "step_s", where);

  if (const auto it = doc.find("epsilon"); it != doc.end()) {
    const bool frac = it->contains("fraction_of_star");
    const bool abs = it->contains("absolute");
    if (frac == abs) parse_fail("epsilon needs exactly one of 'fraction_of_star' or 'absolute'");
    s.epsilon = frac ? EpsilonPolicy::fraction_of_star(number(*it, "fraction_of_star", "epsilon"))
                     : EpsilonPolicy::absolute(number(*it, "absolute", "epsilon"));
  }

  if (const auto it = doc.find("loads"); it != doc.end()) {
    if (!it->is_array()) parse_fail("field 'loads' in scenario must be an array");
    const Vector base = grid.loads();
    std::vector<LoadSegment> segments;
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string sw = "loads[" + std::to_string(i) + "]";
      const json& seg = (*it)[i];
      LoadSegment out;
      out.start_s = number(seg, "start_s", sw);
      if (seg.contains("load_pu")) {
        out.load = vector_of(seg["load_pu"], sw + ".load_pu");
      } else if (seg.contains("scale")) {
        out.load = number(seg, "scale", sw) * base;
      } else {
        parse_fail("missing required field 'load_pu' (or 'scale') in " + sw);
      }
      if (seg.contains("end_load_pu")) {
        out.end_load = vector_of(seg["end_load_pu"], sw + ".end_load_pu");
      } else if (seg.contains("end_scale")) {
        out.end_load = number(seg, "end_scale", sw) * base;
      }
      segments.push_back(std::move(out));
    }
    if (!segments.empty()) s.loads = LoadProfile(std::move(segments));
  }

  if (const auto it = doc.find("events"); it != doc.end()) {
    if (!it->is_array()) parse_fail("field 'events' in scenario must be an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string ew = "events[" + std::to_string(i) + "]";
      const json& ev = (*it)[i];
      ScheduledEvent out;
      out.time_s = number(ev, "time_s", ew);
      const json& type = field(ev, "type", ew);
      if (!type.is_string()) parse_fail("field 'type' in " + ew + " must be a string");
      const std::string kind = type.get<std::string>();
      if (kind == "generator_derate") {
        out.event = grid::GeneratorDerate{integer(ev, "bus", ew), number(ev, "factor", ew)};
      } else if (kind == "line_trip") {
        const json& idx = array_field(ev, "lines", ew);
        grid::LineTrip trip;
        for (const json& k : idx) {
          if (!k.is_number_unsigned()) parse_fail("field 'lines' in " + ew + " must hold line indices");
          trip.lines.push_back(k.get<std::size_t>());
        }
        out.event = std::move(trip);
      } else {
        parse_fail("unknown event type '" + kind + "' in " + ew);
      }
      s.events.push_back(std::move(out));
    }
  }

  if (doc.contains("model_update_on_event")) {
    const json& v = doc["model_update_on_event"];
    if (!v.is_boolean()) parse_fail("field 'model_update_on_event' in scenario must be a boolean");
    s.model_update_on_event = v.get<bool>();
  }
  if (doc.contains("seed")) {
    const json& v = doc["seed"];
    if (!v.is_number_unsigned()) parse_fail("field 'seed' in scenario must be a nonnegative integer");
    s.seed = v.get<std::uint64_t>();
  }
  if (doc.contains("initial_u")) s.initial_u = vector_of(doc["initial_u"], "initial_u");
  s.initial_perturbation = number_or(doc, "initial_perturbation", s.initial_perturbation, where);
  if (doc.contains("record_every")) {
    const json& v = doc["record_every"];
    if (!v.is_number_integer()) parse_fail("field 'record_every' in scenario must be an integer");
    s.record_every = v.get<std::int64_t>();
  }
  s.divergence_guard = number_or(doc, "divergence_guard", s.divergence_guard, where);
  s.convergence_tol = number_or(doc, "convergence_tol", s.convergence_tol, where);

  s.validate(static_cast<Eigen::Index>(grid.bus_count()));
  return s;
}

Scenario load_scenario(const std::filesystem::path& path, const grid::GridCase& grid) {
  return parse_scenario(read_text_file(path), grid);
}

}  // namespace feedopt
