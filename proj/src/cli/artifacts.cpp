#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "mmfg/cli.hpp"
#include "mmfg/errors.hpp"
#include "mmfg/simd.hpp"

namespace mmfg::cli {

std::vector<TrajectoryRow> rows_from_paths(const FBSDEPaths& p) {
  std::vector<TrajectoryRow> rows;
  for (std::size_t n = 0; n < p.grid.size(); ++n) {
    rows.push_back({p.grid.time(n), p.alpha0[n], simd::mean(p.X[n]), simd::mean(p.gamma[n]),
                    simd::mean(p.P[n]), simd::mean(p.Pgrave[n]), simd::mean(p.Y[n]),
                    simd::mean(p.Ygrave[n])});
  }
  return rows;
}

std::vector<TrajectoryRow> rows_from_ode(const MeanFieldOdeResult& o) {
  std::vector<TrajectoryRow> rows;
  for (std::size_t n = 0; n < o.t.size(); ++n) {
    rows.push_back({o.t[n], o.alpha0[n], o.mean_x[n], o.mean_gamma[n], o.P[n], o.Pgrave[n], o.Y,
                    o.Ygrave});
  }
  return rows;
}

namespace {

void append_num(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

}  // namespace

std::string trajectories_csv(const std::vector<TrajectoryRow>& rows) {
  std::string out = std::string(kTrajectoryHeader) + "\n";
  for (const auto& r : rows) {
    const double vals[8] = {r.t, r.alpha0, r.mean_x, r.mean_gamma, r.mean_P, r.mean_Pgrave, r.mean_Y,
                            r.mean_Ygrave};
    for (int k = 0; k < 8; ++k) {
      if (k) out += ',';
      append_num(out, vals[k]);
    }
    out += '\n';
  }
  return out;
}

std::vector<TrajectoryRow> parse_trajectories_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw IoError("trajectories: empty input (line 1)");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTrajectoryHeader) throw IoError("trajectories: unexpected header on line 1");
  std::vector<TrajectoryRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    double v[8];
    std::istringstream ls(line);
    std::string cell;
    int k = 0;
    try {
      while (std::getline(ls, cell, ',')) {
        if (k >= 8) throw std::invalid_argument("too many columns");
        std::size_t pos = 0;
        v[k] = std::stod(cell, &pos);
        if (pos != cell.size()) throw std::invalid_argument("trailing characters");
        ++k;
      }
    } catch (const std::exception&) {
      throw IoError("trajectories: malformed line " + std::to_string(lineno));
    }
    if (k != 8) throw IoError("trajectories: malformed line " + std::to_string(lineno));
    rows.push_back({v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7]});
  }
  return rows;
}

std::string plot_data_csv(const std::vector<TrajectoryRow>& rows, const ModelSpec* model) {
  std::string out = "t,series,value\n";
  const bool oracle = model && model->oracle;
  auto emit = [&](double t, const char* name, double v) {
    append_num(out, t);
    out += ',';
    out += name;
    out += ',';
    append_num(out, v);
    out += '\n';
  };
  for (const auto& r : rows) {
    emit(r.t, "alpha0", r.alpha0);
    emit(r.t, "mean_x", r.mean_x);
    emit(r.t, "mean_gamma", r.mean_gamma);
    emit(r.t, "mean_P", r.mean_P);
    emit(r.t, "mean_Pgrave", r.mean_Pgrave);
    emit(r.t, "mean_Y", r.mean_Y);
    emit(r.t, "mean_Ygrave", r.mean_Ygrave);
    if (oracle) {
      emit(r.t, "mean_gamma_oracle", model->oracle->mean_gamma(r.t));
      emit(r.t, "alpha0_oracle", model->oracle->alpha0(r.t));
    }
  }
  return out;
}

void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  std::error_code ec;
  if (target.has_parent_path()) fs::create_directories(target.parent_path(), ec);
  if (ec) throw IoError("cannot create directory for '" + path + "': " + ec.message());
  const std::string tmp = path + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      fs::remove(tmp, ec);
      throw IoError("write failed for '" + tmp + "'");
    }
  }
  fs::rename(tmp, target, ec);
  if (ec) {
    std::error_code ignore;
    fs::remove(tmp, ignore);
    throw IoError("cannot rename to '" + path + "': " + ec.message());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace mmfg::cli
