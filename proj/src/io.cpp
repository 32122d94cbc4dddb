#include "pricer/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "json.hpp"

namespace pricer {

namespace {

using nlohmann::json;

int line_of_byte(const std::string& text, size_t byte) {
  int line = 1;
  const size_t stop = std::min(byte, text.size());
  for (size_t i = 0; i < stop; ++i)
    if (text[i] == '\n') ++line;
  return line;
}

// Best-effort anchor for semantic problems: find the source line of the field
// the message talks about. Longer keys are matched first so "price_coef" wins
// over "price".
int guess_line(const std::string& text, const std::string& message) {
  static const std::vector<std::pair<std::string, std::string>> kKeyHints = {
      {"linear_constraints", "linear_constraints"},
      {"parking_scenario", "parking_scenario"},
      {"price coefficient", "price_coef"},
      {"price_coef", "price_coef"},
      {"exo_utility", "exo_utility"},
      {"class_weight", "class_weight"},
      {"class weight", "class_weight"},
      {"access_time", "access_time"},
      {"dest_time", "dest_time"},
      {"price_lb", "price_lb"},
      {"price_ub", "price_ub"},
      {"alternative", "alternatives"},
      {"customer", "customers"},
      {"profiles", "profiles"},
      {"classes", "classes"},
      {"weights", "class_weight"},
      {"bound", "price_lb"},
  };
  for (const auto& [needle, key] : kKeyHints) {
    if (message.find(needle) == std::string::npos) continue;
    const size_t pos = text.find("\"" + key + "\"");
    if (pos != std::string::npos) return line_of_byte(text, pos);
  }
  return 1;
}

const json& need(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw std::runtime_error(std::string("missing field: ") + key);
  return *it;
}

Eigen::VectorXd read_vector(const json& j, const char* key) {
  if (!j.is_array()) throw std::runtime_error(std::string(key) + " must be an array");
  Eigen::VectorXd v(j.size());
  for (size_t k = 0; k < j.size(); ++k) {
    if (!j[k].is_number()) throw std::runtime_error(std::string(key) + " must hold numbers");
    v(static_cast<int>(k)) = j[k].get<double>();
  }
  return v;
}

Eigen::VectorXd read_vector_n(const json& j, const char* key, int n) {
  Eigen::VectorXd v = read_vector(j, key);
  if (v.size() != n)
    throw std::runtime_error(std::string(key) + " must have " + std::to_string(n) +
                             " entries");
  return v;
}

Eigen::MatrixXd read_matrix(const json& j, const char* key) {
  if (!j.is_array() || j.empty())
    throw std::runtime_error(std::string(key) + " must be a nonempty array of rows");
  const size_t cols = j[0].is_array() ? j[0].size() : 0;
  Eigen::MatrixXd m(j.size(), cols);
  for (size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      throw std::runtime_error(std::string(key) + " rows must be arrays of equal length");
    for (size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number())
        throw std::runtime_error(std::string(key) + " must hold numbers");
      m(static_cast<int>(r), static_cast<int>(c)) = j[r][c].get<double>();
    }
  }
  return m;
}

Eigen::MatrixXd read_matrix_nn(const json& j, const char* key, int r, int c) {
  Eigen::MatrixXd m = read_matrix(j, key);
  if (m.rows() != r || m.cols() != c)
    throw std::runtime_error(std::string(key) + " must be " + std::to_string(r) + " x " +
                             std::to_string(c));
  return m;
}

ParkingParams read_params(const json& j) {
  ParkingParams p;
  p.asc_psp = need(j, "asc_psp").get<double>();
  p.asc_pup = need(j, "asc_pup").get<double>();
  p.beta_td = need(j, "beta_td").get<double>();
  p.beta_origin = need(j, "beta_origin").get<double>();
  p.beta_age_veh = need(j, "beta_age_veh").get<double>();
  p.fee_psp_low_inc = need(j, "fee_psp_low_inc").get<double>();
  p.fee_psp_resident = need(j, "fee_psp_resident").get<double>();
  p.fee_pup_low_inc = need(j, "fee_pup_low_inc").get<double>();
  p.fee_pup_resident = need(j, "fee_pup_resident").get<double>();
  p.taste_mean = read_vector_n(need(j, "taste_mean"), "taste_mean", 2);
  p.taste_cov = read_matrix_nn(need(j, "taste_cov"), "taste_cov", 2, 2);
  p.taste_box_lo = read_vector_n(need(j, "taste_box_lo"), "taste_box_lo", 2);
  p.taste_box_hi = read_vector_n(need(j, "taste_box_hi"), "taste_box_hi", 2);
  p.price_upper = need(j, "price_upper").get<double>();
  return p;
}

LoadedInstance extract(const json& j) {
  LoadedInstance li;
  MixedLogitInstance& inst = li.instance;
  if (j.contains("name")) inst.name = j["name"].get<std::string>();

  const json& alts = need(j, "alternatives");
  if (!alts.is_array() || alts.empty())
    throw std::runtime_error("alternatives must be a nonempty array");
  for (const auto& a : alts) {
    Alternative alt;
    alt.name = need(a, "name").get<std::string>();
    alt.priced = need(a, "priced").get<bool>();
    inst.alternatives.push_back(alt);
  }

  inst.customers = need(j, "customers").get<int>();
  inst.classes = need(j, "classes").get<int>();

  const json& pc = need(j, "price_coef");
  const json& xu = need(j, "exo_utility");
  if (!pc.is_array() || pc.size() != inst.alternatives.size())
    throw std::runtime_error("price_coef must have one matrix per alternative");
  if (!xu.is_array() || xu.size() != inst.alternatives.size())
    throw std::runtime_error("exo_utility must have one matrix per alternative");
  for (size_t i = 0; i < pc.size(); ++i) {
    inst.price_coef.push_back(read_matrix(pc[i], "price_coef"));
    inst.exo_utility.push_back(read_matrix(xu[i], "exo_utility"));
  }

  inst.class_weight = read_matrix(need(j, "class_weight"), "class_weight");
  inst.price_lb = read_vector(need(j, "price_lb"), "price_lb");
  inst.price_ub = read_vector(need(j, "price_ub"), "price_ub");

  if (j.contains("linear_constraints") && !j["linear_constraints"].is_null()) {
    const json& lc = j["linear_constraints"];
    LinearConstraints c;
    c.A = read_matrix(need(lc, "A"), "linear_constraints");
    c.b = read_vector(need(lc, "b"), "linear_constraints");
    inst.linear_constraints = std::move(c);
  }

  if (j.contains("parking_scenario") && !j["parking_scenario"].is_null()) {
    const json& ps = j["parking_scenario"];
    ParkingScenario sc;
    sc.params = read_params(need(ps, "params"));
    for (const auto& pr : need(ps, "profiles")) {
      CustomerProfile c;
      c.access_time = read_vector_n(need(pr, "access_time"), "access_time", 3);
      c.dest_time = read_vector_n(need(pr, "dest_time"), "dest_time", 3);
      c.origin = need(pr, "origin").get<int>();
      c.low_inc = need(pr, "low_inc").get<int>();
      c.resident = need(pr, "resident").get<int>();
      c.age_veh_le3 = need(pr, "age_veh_le3").get<int>();
      sc.profiles.push_back(std::move(c));
    }
    li.parking = std::move(sc);
  }
  return li;
}

// minimal JSON string escaping; instance names and alternative labels are the
// only strings written
void write_string(std::ostream& os, const std::string& s) {
  os << '"';
  for (char ch : s) {
    switch (ch) {
      case '"': os << "\\\""; break;
      case '\\': os << "\\\\"; break;
      case '\n': os << "\\n"; break;
      case '\t': os << "\\t"; break;
      case '\r': os << "\\r"; break;
      default:
        if (static_cast<unsigned char>(ch) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", ch);
          os << buf;
        } else {
          os << ch;
        }
    }
  }
  os << '"';
}

// non-finite doubles cannot appear in JSON numbers; they are quoted and the
// readers in this project accept both spellings
void write_double(std::ostream& os, double v) {
  if (std::isfinite(v)) {
    os << format_double(v);
  } else {
    os << '"' << format_double(v) << '"';
  }
}

void write_vector(std::ostream& os, const Eigen::VectorXd& v) {
  os << '[';
  for (int i = 0; i < v.size(); ++i) {
    if (i) os << ", ";
    write_double(os, v(i));
  }
  os << ']';
}

void write_matrix(std::ostream& os, const Eigen::MatrixXd& m, const char* indent) {
  os << '[';
  for (int r = 0; r < m.rows(); ++r) {
    if (r) os << ',';
    os << '\n' << indent << "  ";
    os << '[';
    for (int c = 0; c < m.cols(); ++c) {
      if (c) os << ", ";
      write_double(os, m(r, c));
    }
    os << ']';
  }
  os << '\n' << indent << ']';
}

void write_profile(std::ostream& os, const CustomerProfile& c) {
  os << "{\"access_time\": ";
  write_vector(os, c.access_time);
  os << ", \"dest_time\": ";
  write_vector(os, c.dest_time);
  os << ", \"origin\": " << c.origin << ", \"low_inc\": " << c.low_inc
     << ", \"resident\": " << c.resident << ", \"age_veh_le3\": " << c.age_veh_le3 << "}";
}

const char* status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::OptimalWithinTol: return "optimal";
    case SolveStatus::TimeLimit: return "time_limit";
    case SolveStatus::NodeLimit: return "node_limit";
  }
  return "unknown";
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

LoadedInstance load_instance(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, 0, "cannot open file");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(path, line_of_byte(text, e.byte > 0 ? e.byte - 1 : 0), e.what());
  }

  LoadedInstance li;
  try {
    li = extract(j);
    validate(li.instance);
  } catch (const std::exception& e) {
    throw ParseError(path, guess_line(text, e.what()), e.what());
  }
  return li;
}

void save_instance(const MixedLogitInstance& inst, const std::string& path,
                   const ParkingScenario* scenario) {
  std::ostringstream os;
  os << "{\n  \"name\": ";
  write_string(os, inst.name);
  os << ",\n  \"alternatives\": [";
  for (int i = 0; i < inst.num_alternatives(); ++i) {
    if (i) os << ',';
    os << "\n    {\"name\": ";
    write_string(os, inst.alternatives[i].name);
    os << ", \"priced\": " << (inst.alternatives[i].priced ? "true" : "false") << "}";
  }
  os << "\n  ],\n  \"customers\": " << inst.customers;
  os << ",\n  \"classes\": " << inst.classes;
  os << ",\n  \"price_lb\": ";
  write_vector(os, inst.price_lb);
  os << ",\n  \"price_ub\": ";
  write_vector(os, inst.price_ub);
  os << ",\n  \"class_weight\": ";
  write_matrix(os, inst.class_weight, "  ");
  os << ",\n  \"exo_utility\": [";
  for (size_t i = 0; i < inst.exo_utility.size(); ++i) {
    if (i) os << ',';
    os << "\n    ";
    write_matrix(os, inst.exo_utility[i], "    ");
  }
  os << "\n  ],\n  \"price_coef\": [";
  for (size_t i = 0; i < inst.price_coef.size(); ++i) {
    if (i) os << ',';
    os << "\n    ";
    write_matrix(os, inst.price_coef[i], "    ");
  }
  os << "\n  ]";
  if (inst.linear_constraints) {
    os << ",\n  \"linear_constraints\": {\n    \"A\": ";
    write_matrix(os, inst.linear_constraints->A, "    ");
    os << ",\n    \"b\": ";
    write_vector(os, inst.linear_constraints->b);
    os << "\n  }";
  }
  if (scenario) {
    const ParkingParams& p = scenario->params;
    os << ",\n  \"parking_scenario\": {\n    \"params\": {";
    os << "\n      \"asc_psp\": " << format_double(p.asc_psp);
    os << ",\n      \"asc_pup\": " << format_double(p.asc_pup);
    os << ",\n      \"beta_td\": " << format_double(p.beta_td);
    os << ",\n      \"beta_origin\": " << format_double(p.beta_origin);
    os << ",\n      \"beta_age_veh\": " << format_double(p.beta_age_veh);
    os << ",\n      \"fee_psp_low_inc\": " << format_double(p.fee_psp_low_inc);
    os << ",\n      \"fee_psp_resident\": " << format_double(p.fee_psp_resident);
    os << ",\n      \"fee_pup_low_inc\": " << format_double(p.fee_pup_low_inc);
    os << ",\n      \"fee_pup_resident\": " << format_double(p.fee_pup_resident);
    os << ",\n      \"taste_mean\": ";
    write_vector(os, p.taste_mean);
    os << ",\n      \"taste_cov\": ";
    write_matrix(os, p.taste_cov, "      ");
    os << ",\n      \"taste_box_lo\": ";
    write_vector(os, p.taste_box_lo);
    os << ",\n      \"taste_box_hi\": ";
    write_vector(os, p.taste_box_hi);
    os << ",\n      \"price_upper\": " << format_double(p.price_upper);
    os << "\n    },\n    \"profiles\": [";
    for (size_t k = 0; k < scenario->profiles.size(); ++k) {
      if (k) os << ',';
      os << "\n      ";
      write_profile(os, scenario->profiles[k]);
    }
    os << "\n    ]\n  }";
  }
  os << "\n}\n";

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << os.str();
}

void write_result(const SolveReport& report, const MixedLogitInstance& inst,
                  const std::string& path) {
  std::ostringstream os;
  os << "{\n  \"instance\": ";
  write_string(os, inst.name);
  os << ",\n  \"status\": \"" << status_name(report.status) << "\"";
  os << ",\n  \"prices\": ";
  write_vector(os, report.incumbent.values);
  os << ",\n  \"value\": ";
  write_double(os, report.incumbent_value);
  os << ",\n  \"upper_bound\": ";
  write_double(os, report.global_upper_bound);
  os << ",\n  \"gap\": ";
  write_double(os, report.gap);
  os << ",\n  \"nodes_processed\": " << report.nodes_processed;
  os << ",\n  \"solutions\": [";
  for (size_t k = 0; k < report.solutions.size(); ++k) {
    if (k) os << ',';
    os << "\n    ";
    write_vector(os, report.solutions[k].values);
  }
  os << "\n  ]\n}\n";

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << os.str();
}

void write_trace(const SolveReport& report, const std::string& path,
                 bool include_wall_times) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "wall_time incumbent upper_bound open_nodes max_box_radius\n";
  for (const TracePoint& tp : report.trace) {
    out << format_double(include_wall_times ? tp.wall_time : 0.0) << ' '
        << format_double(tp.incumbent_value) << ' '
        << format_double(tp.global_upper_bound) << ' ' << tp.open_nodes << ' '
        << format_double(tp.max_box_radius) << '\n';
  }
}

}  // namespace pricer
