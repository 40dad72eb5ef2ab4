#include "cpirt/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

namespace cpirt {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_number(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

std::string json_number(double v) {
  if (!std::isfinite(v)) return "null";
  // A bare "-0" reads back as the integer 0 and loses its sign.
  if (v == 0.0 && std::signbit(v)) return "-0.0";
  return format_number(v);
}

std::string json_array(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) s += ", ";
    s += json_number(v[k]);
  }
  return s + "]";
}

std::string json_string(const std::string& s) { return json(s).dump(); }

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

bool is_numeric(const std::string& token) {
  if (token.empty()) return false;
  double v = 0.0;
  const char* first = token.data();
  const char* last = first + token.size();
  if (*first == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  return res.ec == std::errc() && res.ptr == last;
}

double number_or_nan(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!j.is_number()) throw ParseError("expected a number, got " + j.dump());
  return j.get<double>();
}

std::vector<double> number_array(const json& j, const char* key) {
  if (!j.is_array()) throw ParseError(std::string("key '") + key + "' must be an array");
  std::vector<double> v;
  for (const auto& e : j) v.push_back(number_or_nan(e));
  return v;
}

void require_exact_keys(const json& doc, const std::set<std::string>& keys, const char* kind) {
  if (!doc.is_object()) throw ParseError(std::string(kind) + " document must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (!keys.count(key)) throw ParseError(std::string("unknown key '") + key + "' in " + kind);
  }
  for (const auto& key : keys) {
    if (!doc.contains(key)) throw ParseError(std::string("missing key '") + key + "' in " + kind);
  }
  if (doc.at("schema_version") != kSchemaVersion)
    throw ParseError(std::string("unsupported schema_version in ") + kind);
}

}  // namespace

ResponseMatrix parse_responses(std::istream& in) {
  std::string line;
  std::size_t line_no = 0, n_items = 0;
  bool first_content = true;
  std::vector<std::uint8_t> entries;
  std::size_t n_rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (first_content) {
      first_content = false;
      n_items = fields.size();
      bool header = false;
      for (const auto& f : fields) header = header || !is_numeric(f);
      if (header) continue;
    }
    if (fields.size() != n_items)
      throw ParseError("row " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                           " fields, expected " + std::to_string(n_items),
                       line_no, 0);
    for (std::size_t k = 0; k < fields.size(); ++k) {
      if (fields[k] != "0" && fields[k] != "1")
        throw ParseError("non-binary token '" + fields[k] + "' at row " + std::to_string(line_no) +
                             ", column " + std::to_string(k + 1),
                         line_no, k + 1);
      entries.push_back(fields[k] == "1" ? 1 : 0);
    }
    ++n_rows;
  }
  if (n_rows == 0) throw ParseError("no response rows found");
  if (n_items < 2) throw ParseError("response data needs at least two items");
  return ResponseMatrix(n_rows, n_items, std::move(entries));
}

ResponseMatrix read_responses(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_responses(in);
}

void write_responses(const ResponseMatrix& data, const fs::path& path) {
  std::string s;
  for (std::size_t j = 1; j <= data.n_items(); ++j)
    s += (j > 1 ? ",item" : "item") + std::to_string(j);
  s += '\n';
  for (std::size_t i = 0; i < data.n_persons(); ++i) {
    const auto row = data.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) s += ',';
      s += row[j] ? '1' : '0';
    }
    s += '\n';
  }
  write_text(path, s);
}

std::string fit_to_json(const FitResult& fit) {
  std::ostringstream o;
  o << "{\n";
  o << "  \"schema_version\": " << kSchemaVersion << ",\n";
  o << "  \"J\": " << fit.support.J << ",\n";
  o << "  \"c\": " << fit.support.c << ",\n";
  o << "  \"n_persons\": " << fit.n_persons << ",\n";
  o << "  \"d\": " << json_array(fit.items.d) << ",\n";
  o << "  \"a\": " << json_array(fit.items.a) << ",\n";
  o << "  \"gamma\": " << json_array(fit.items.gamma) << ",\n";
  o << "  \"alpha\": " << json_number(fit.structural.alpha) << ",\n";
  o << "  \"beta\": " << json_number(fit.structural.beta) << ",\n";
  o << "  \"loglik\": " << json_number(fit.loglik) << ",\n";
  o << "  \"bic\": " << json_number(fit.bic) << ",\n";
  o << "  \"n_free_parameters\": " << fit.n_free_parameters << ",\n";
  o << "  \"converged\": " << (fit.converged ? "true" : "false") << ",\n";
  o << "  \"iterations\": " << fit.iterations << ",\n";
  o << "  \"gradient_norm\": " << json_number(fit.gradient_norm) << ",\n";
  o << "  \"warnings\": [";
  for (std::size_t k = 0; k < fit.warnings.size(); ++k)
    o << (k ? ", " : "") << json_string(fit.warnings[k]);
  o << "]\n}\n";
  return o.str();
}

FitResult fit_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("fit document is not valid JSON: ") + e.what());
  }
  require_exact_keys(doc,
                     {"schema_version", "J", "c", "n_persons", "d", "a", "gamma", "alpha", "beta",
                      "loglik", "bic", "n_free_parameters", "converged", "iterations",
                      "gradient_norm", "warnings"},
                     "fit document");
  try {
    FitResult fit;
    fit.support = ChangePointSupport(doc.at("c").get<std::size_t>(), doc.at("J").get<std::size_t>());
    fit.n_persons = doc.at("n_persons").get<std::size_t>();
    fit.items.d = number_array(doc.at("d"), "d");
    fit.items.a = number_array(doc.at("a"), "a");
    fit.items.gamma = number_array(doc.at("gamma"), "gamma");
    fit.items.validate(fit.support, false);
    fit.structural = {number_or_nan(doc.at("alpha")), number_or_nan(doc.at("beta"))};
    fit.loglik = number_or_nan(doc.at("loglik"));
    fit.bic = number_or_nan(doc.at("bic"));
    fit.n_free_parameters = doc.at("n_free_parameters").get<std::size_t>();
    fit.converged = doc.at("converged").get<bool>();
    fit.iterations = doc.at("iterations").get<std::size_t>();
    fit.gradient_norm = number_or_nan(doc.at("gradient_norm"));
    fit.warnings = doc.at("warnings").get<std::vector<std::string>>();
    return fit;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed fit document: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("invalid fit document: ") + e.what());
  }
}

void write_fit(const FitResult& fit, const fs::path& path) { write_text(path, fit_to_json(fit)); }

FitResult read_fit(const fs::path& path) { return fit_from_json(read_text(path)); }

void write_scores(const std::vector<PersonPosterior>& posteriors,
                  const ChangePointSupport& support, const fs::path& path) {
  std::string s = "person_index,theta_eap,theta_cleansed,tau_mode,prob_change";
  for (std::size_t tau = support.c; tau <= support.J; ++tau) s += ",pmf_" + std::to_string(tau);
  s += '\n';
  for (std::size_t i = 0; i < posteriors.size(); ++i) {
    const auto& p = posteriors[i];
    if (p.tau_pmf.size() != support.size())
      throw std::invalid_argument("posterior length does not match the support");
    s += std::to_string(i + 1) + ',' + format_number(p.theta_eap) + ',' +
         format_number(p.theta_cleansed) + ',' + std::to_string(p.tau_mode) + ',' +
         format_number(p.prob_change);
    for (double v : p.tau_pmf) s += ',' + format_number(v);
    s += '\n';
  }
  write_text(path, s);
}

std::string selection_to_json(const SelectionReport& report) {
  std::ostringstream o;
  const auto& chosen = report.chosen();
  o << "{\n";
  o << "  \"schema_version\": " << kSchemaVersion << ",\n";
  o << "  \"criterion\": \"" << (report.criterion == Criterion::BIC ? "BIC" : "AIC") << "\",\n";
  o << "  \"n_persons\": " << report.n_persons << ",\n";
  o << "  \"J\": " << report.n_items << ",\n";
  o << "  \"chosen_c\": " << chosen.c << ",\n";
  o << "  \"chosen_baseline\": " << (chosen.baseline ? "true" : "false") << ",\n";
  o << "  \"candidates\": [\n";
  for (std::size_t k = 0; k < report.candidates.size(); ++k) {
    const auto& cand = report.candidates[k];
    o << "    {\"c\": " << cand.c << ", \"baseline\": " << (cand.baseline ? "true" : "false")
      << ", \"loglik\": " << (cand.fit ? json_number(cand.loglik) : "null")
      << ", \"n_free_parameters\": " << cand.n_free_parameters
      << ", \"bic\": " << (cand.fit ? json_number(cand.bic) : "null")
      << ", \"aic\": " << (cand.fit ? json_number(cand.aic) : "null")
      << ", \"converged\": " << (cand.converged ? "true" : "false")
      << ", \"error\": " << json_string(cand.error) << "}"
      << (k + 1 < report.candidates.size() ? ",\n" : "\n");
  }
  o << "  ]\n}\n";
  return o.str();
}

void write_selection(const SelectionReport& report, const fs::path& path) {
  write_text(path, selection_to_json(report));
}

std::string metrics_to_csv(const MetricsTable& table) {
  std::string s = "metric,item,value\n";
  const auto value = [](const std::optional<double>& v) {
    return v && std::isfinite(*v) ? format_number(*v) : std::string("NA");
  };
  for (const auto& [name, v] : table.scalars) s += name + ",," + value(v) + '\n';
  for (const auto& m : table.items) {
    const auto item = std::to_string(m.item);
    s += "bias_d," + item + ',' + value(m.bias_d) + '\n';
    s += "rmse_d," + item + ',' + value(m.rmse_d) + '\n';
    s += "bias_a," + item + ',' + value(m.bias_a) + '\n';
    s += "rmse_a," + item + ',' + value(m.rmse_a) + '\n';
    if (m.bias_gamma) {
      s += "bias_gamma," + item + ',' + value(m.bias_gamma) + '\n';
      s += "rmse_gamma," + item + ',' + value(m.rmse_gamma) + '\n';
    }
  }
  return s;
}

std::string metrics_to_json(const MetricsTable& table, const ScenarioConfig& config) {
  const auto value = [](const std::optional<double>& v) {
    return v ? json_number(*v) : std::string("null");
  };
  std::ostringstream o;
  o << "{\n";
  o << "  \"schema_version\": " << kSchemaVersion << ",\n";
  o << "  \"config\": {\"scenario\": " << static_cast<int>(config.scenario)
    << ", \"n_persons\": " << config.n_persons << ", \"n_items\": " << config.n_items
    << ", \"c\": " << config.c << ", \"alpha\": " << json_number(config.alpha)
    << ", \"beta\": " << json_number(config.beta) << ", \"replications\": " << config.replications
    << ", \"seed\": " << config.seed << "},\n";
  o << "  \"metrics\": {";
  for (std::size_t k = 0; k < table.scalars.size(); ++k)
    o << (k ? ", " : "") << json_string(table.scalars[k].first) << ": "
      << value(table.scalars[k].second);
  o << "},\n";
  o << "  \"items\": [";
  for (std::size_t k = 0; k < table.items.size(); ++k) {
    const auto& m = table.items[k];
    o << (k ? ",\n    " : "\n    ") << "{\"item\": " << m.item
      << ", \"bias_d\": " << json_number(m.bias_d) << ", \"rmse_d\": " << json_number(m.rmse_d)
      << ", \"bias_a\": " << json_number(m.bias_a) << ", \"rmse_a\": " << json_number(m.rmse_a)
      << ", \"bias_gamma\": " << value(m.bias_gamma)
      << ", \"rmse_gamma\": " << value(m.rmse_gamma) << "}";
  }
  o << (table.items.empty() ? "]\n}\n" : "\n  ]\n}\n");
  return o.str();
}

void write_simulated_dataset(const SimulatedDataset& data, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
  write_responses(data.responses, dir / "responses.csv");

  std::string persons = "person_index,theta_true,tau_true\n";
  for (std::size_t i = 0; i < data.theta_true.size(); ++i)
    persons += std::to_string(i + 1) + ',' + format_number(data.theta_true[i]) + ',' +
               std::to_string(data.tau_true[i]) + '\n';
  write_text(dir / "persons_true.csv", persons);

  std::string items = "item,d,a,gamma\n";
  for (std::size_t j = 0; j < data.items_true.n_items(); ++j)
    items += std::to_string(j + 1) + ',' + format_number(data.items_true.d[j]) + ',' +
             format_number(data.items_true.a[j]) + ',' + format_number(data.items_true.gamma[j]) +
             '\n';
  write_text(dir / "items_true.csv", items);

  std::ostringstream o;
  o << "{\n  \"schema_version\": " << kSchemaVersion << ",\n"
    << "  \"N\": " << data.responses.n_persons() << ",\n"
    << "  \"J\": " << data.support.J << ",\n"
    << "  \"c\": " << data.support.c << ",\n"
    << "  \"alpha\": " << json_number(data.structural_true.alpha) << ",\n"
    << "  \"beta\": " << json_number(data.structural_true.beta) << ",\n"
    << "  \"stream_seed\": " << data.seed << ",\n"
    << "  \"d\": " << json_array(data.items_true.d) << ",\n"
    << "  \"a\": " << json_array(data.items_true.a) << ",\n"
    << "  \"gamma\": " << json_array(data.items_true.gamma) << "\n}\n";
  write_text(dir / "truth.json", o.str());
}

}  // namespace cpirt
