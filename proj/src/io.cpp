#include "ggflow/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ggflow/errors.hpp"

namespace ggflow::io {

json to_json(const Vector& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json to_json(const Matrix& m) {
  json a = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    a.push_back(row);
  }
  return a;
}

Vector vector_from_json(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) throw InvalidArgument("'" + field + "' must be a non-empty array of numbers");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw InvalidArgument("'" + field + "' must contain only numbers");
    v(static_cast<Index>(i)) = j[i].get<double>();
  }
  return v;
}

Matrix matrix_from_json(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) throw InvalidArgument("'" + field + "' must be a non-empty array of rows");
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw InvalidArgument("'" + field + "' rows must have equal length");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) throw InvalidArgument("'" + field + "' must contain only numbers");
      m(static_cast<Index>(r), static_cast<Index>(c)) = j[r][c].get<double>();
    }
  }
  return m;
}

json system_to_json(const GraphSystem& sys) { return {{"pi", to_json(sys.pi())}, {"kappa", to_json(sys.kappa())}}; }

GraphSystem system_from_json(const json& j) {
  if (!j.is_object() || !j.contains("pi") || !j.contains("kappa"))
    throw InvalidArgument("system needs fields 'pi' and 'kappa'");
  return GraphSystem::build(vector_from_json(j.at("pi"), "pi"), matrix_from_json(j.at("kappa"), "kappa"));
}

json spec_to_json(const DissipationSpec& spec) { return {{"family", spec.family()}, {"params", spec.params()}}; }

DissipationSpec spec_from_json(const json& j) {
  if (!j.is_object() || !j.contains("family") || !j.at("family").is_string())
    throw InvalidArgument("dissipation needs a string field 'family'");
  return make_dissipation(j.at("family").get<std::string>(), j.value("params", json::object()));
}

json entropy_to_json(const EntropySpec& e) { return {{"family", e.family()}, {"params", e.params()}}; }

EntropySpec entropy_from_json(const json& j) {
  if (!j.is_object() || !j.contains("family") || !j.at("family").is_string())
    throw InvalidArgument("entropy needs a string field 'family'");
  return make_entropy(j.at("family").get<std::string>(), j.value("params", json::object()));
}

json edb_to_json(const EDBReport& r) {
  return {{"energy_start", r.energy_start},
          {"energy_end", r.energy_end},
          {"action_integral", r.action_integral},
          {"fisher_integral", r.fisher_integral},
          {"deficit", r.deficit},
          {"ce_residual", r.ce_residual},
          {"max_step", r.max_step},
          {"action_quadrature", r.action_quadrature},
          {"fisher_quadrature", "trapezoid"},
          {"fisher_envelope_exact", r.fisher_envelope_exact}};
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write to " + tmp.string() + " failed");
  }
  std::filesystem::rename(tmp, path);
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string states_csv(const std::vector<double>& times, const std::vector<Measure>& states) {
  std::ostringstream os;
  os << "t,state_index,u\n";
  for (std::size_t k = 0; k < times.size(); ++k)
    for (Index i = 0; i < states[k].size(); ++i)
      os << format_double(times[k]) << ',' << i << ',' << format_double(states[k].u()(i)) << '\n';
  return os.str();
}

std::string flux_csv(const GraphSystem& sys, const CurveWithFlux& curve) {
  std::ostringstream os;
  os << "t,i,j,w\n";
  for (std::size_t k = 0; k < curve.intervals(); ++k) {
    const double t = 0.5 * (curve.times[k] + curve.times[k + 1]);
    const Matrix j = curve.fluxes_per_interval() ? curve.fluxes[k].j
                                                 : Matrix(0.5 * (curve.fluxes[k].j + curve.fluxes[k + 1].j));
    for (const Edge& e : sys.edges())
      os << format_double(t) << ',' << e.from << ',' << e.to << ',' << format_double(2.0 * j(e.from, e.to) / e.theta)
         << '\n';
  }
  return os.str();
}

std::string edge_diagnostics_csv(const std::vector<EdgeDiagnostic>& rows) {
  std::ostringstream os;
  os << "t,i,j,u_i,u_j,w,upsilon,d_phi,b_phi\n";
  for (const auto& r : rows)
    os << format_double(r.t) << ',' << r.i << ',' << r.j << ',' << format_double(r.u_i) << ',' << format_double(r.u_j)
       << ',' << format_double(r.w) << ',' << format_double(r.upsilon.value()) << ','
       << format_double(r.d_phi.value()) << ',' << format_double(r.b_phi.value()) << '\n';
  return os.str();
}

std::string mm_csv(const MMRun& run) {
  std::ostringstream os;
  os << "n,t,W_value,energy,slope_sample\n";
  for (std::size_t k = 0; k < run.records.size(); ++k) {
    const MMRecord& r = run.records[k];
    const double dt = run.times[k + 1] - run.times[k];
    os << k + 1 << ',' << format_double(r.t) << ',' << format_double(r.w_value) << ',' << format_double(r.energy)
       << ',' << format_double((r.edi_slack + r.w_value) / dt) << '\n';
  }
  return os.str();
}

std::string events_csv(const ParticleEnsemble& ens) {
  std::ostringstream os;
  os << "t,particle,from,to\n";
  for (const auto& e : ens.events)
    os << format_double(e.t) << ',' << e.particle << ',' << e.from << ',' << e.to << '\n';
  return os.str();
}

}  // namespace ggflow::io
