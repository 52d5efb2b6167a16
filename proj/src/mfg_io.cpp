#include "udn/mfg_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "udn/reporting.hpp"

namespace udn::mfg {

namespace {

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
  }
  template <typename T>
  void put(T v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void put_block(const double* p, std::size_t n) {
    out_.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
  }
  void raw(const char* p, std::size_t n) { out_.write(p, static_cast<std::streamsize>(n)); }
  void finish(const std::filesystem::path& path) {
    out_.flush();
    if (!out_) throw std::runtime_error("write failed: " + path.string());
  }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw std::runtime_error("cannot open solution file " + path.string());
  }
  template <typename T>
  T get() {
    T v{};
    in_.read(reinterpret_cast<char*>(&v), sizeof(T));
    check();
    return v;
  }
  void get_block(double* p, std::size_t n) {
    in_.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
    check();
  }
  void raw(char* p, std::size_t n) {
    in_.read(p, static_cast<std::streamsize>(n));
    check();
  }
  void expect_end() {
    in_.peek();
    if (!in_.eof()) throw std::runtime_error("trailing bytes in solution file " + path_.string());
  }

 private:
  void check() {
    if (!in_) throw std::runtime_error("truncated solution file " + path_.string());
  }
  std::filesystem::path path_;
  std::ifstream in_;
};

void put_field(Writer& w, const Field& f) { w.put_block(f.data(), static_cast<std::size_t>(f.size())); }

Field get_field(Reader& r, int rows, int cols) {
  Field f(rows, cols);
  r.get_block(f.data(), static_cast<std::size_t>(f.size()));
  return f;
}

}  // namespace

void save_solution(const std::filesystem::path& path, const MfgSolution& sol) {
  Writer w(path);
  w.raw(kSolutionMagic, sizeof(kSolutionMagic));
  const auto& g = sol.grid;
  const auto& p = sol.params;
  w.put<std::int32_t>(g.n_t);
  w.put<std::int32_t>(g.n_q);
  w.put<double>(g.horizon);

  w.put<double>(p.phy.bandwidth_hz);
  w.put<double>(p.phy.noise_power_w);
  w.put<double>(p.phy.max_power_w);
  w.put<double>(p.phy.circuit_power_w);
  w.put<double>(p.phy.sbs_density);
  w.put<double>(p.phy.drift_scale);
  w.put<double>(p.queue.mean_arrival_bps);
  w.put<double>(p.queue.capacity_bits);
  w.put<double>(p.queue.slot_duration_s);
  w.put<std::int32_t>(p.slots_per_period);
  w.put<double>(p.serving_gain);
  w.put<double>(p.interference_gain);
  w.put<std::int32_t>(static_cast<std::int32_t>(p.boundary));
  w.put<double>(p.initial_mean);
  w.put<double>(p.initial_variance);
  w.put<double>(p.damping);
  w.put<double>(p.tolerance);
  w.put<std::int32_t>(p.max_iters);
  w.put<std::int32_t>(static_cast<std::int32_t>(p.initial_interference));
  w.put<double>(p.existence_epsilon);

  put_field(w, sol.value.values);
  put_field(w, sol.density.values);
  put_field(w, sol.policy.values);
  w.put_block(sol.interference.data(), static_cast<std::size_t>(sol.interference.size()));
  w.put<std::int32_t>(sol.iterations);
  w.put<double>(sol.residual);
  w.put<std::int64_t>(sol.existence_violations);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(sol.residual_history.size()));
  w.put_block(sol.residual_history.data(), sol.residual_history.size());
  w.finish(path);
}

MfgSolution load_solution(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    throw std::runtime_error("solution file not found: " + path.string());
  Reader r(path);
  char magic[sizeof(kSolutionMagic)];
  r.raw(magic, sizeof(magic));
  if (std::memcmp(magic, kSolutionMagic, sizeof(magic)) != 0)
    throw std::runtime_error("not a solution file (bad magic): " + path.string());

  MfgSolution sol;
  auto& g = sol.grid;
  auto& p = sol.params;
  g.n_t = r.get<std::int32_t>();
  g.n_q = r.get<std::int32_t>();
  g.horizon = r.get<double>();
  if (g.n_t < 2 || g.n_q < 2 || g.n_t > (1 << 24) || g.n_q > (1 << 24))
    throw std::runtime_error("corrupt grid header in " + path.string());

  p.phy.bandwidth_hz = r.get<double>();
  p.phy.noise_power_w = r.get<double>();
  p.phy.max_power_w = r.get<double>();
  p.phy.circuit_power_w = r.get<double>();
  p.phy.sbs_density = r.get<double>();
  p.phy.drift_scale = r.get<double>();
  p.queue.mean_arrival_bps = r.get<double>();
  p.queue.capacity_bits = r.get<double>();
  p.queue.slot_duration_s = r.get<double>();
  p.slots_per_period = r.get<std::int32_t>();
  p.serving_gain = r.get<double>();
  p.interference_gain = r.get<double>();
  const auto boundary = r.get<std::int32_t>();
  if (boundary < 0 || boundary > 2) throw std::runtime_error("corrupt boundary in " + path.string());
  p.boundary = static_cast<Boundary>(boundary);
  p.initial_mean = r.get<double>();
  p.initial_variance = r.get<double>();
  p.damping = r.get<double>();
  p.tolerance = r.get<double>();
  p.max_iters = r.get<std::int32_t>();
  const auto init = r.get<std::int32_t>();
  if (init < 0 || init > 1) throw std::runtime_error("corrupt header in " + path.string());
  p.initial_interference = static_cast<InitialInterference>(init);
  p.existence_epsilon = r.get<double>();

  sol.value.values = get_field(r, g.n_t, g.n_q);
  sol.density.values = get_field(r, g.n_t, g.n_q);
  sol.policy.values = get_field(r, g.n_t, g.n_q);
  sol.policy.horizon = g.horizon;
  sol.interference.resize(g.n_t);
  r.get_block(sol.interference.data(), static_cast<std::size_t>(g.n_t));
  sol.iterations = r.get<std::int32_t>();
  sol.residual = r.get<double>();
  sol.existence_violations = r.get<std::int64_t>();
  const auto n_hist = r.get<std::uint32_t>();
  if (n_hist > 1000000u) throw std::runtime_error("corrupt residual history in " + path.string());
  sol.residual_history.resize(n_hist);
  r.get_block(sol.residual_history.data(), n_hist);
  r.expect_end();
  return sol;
}

void write_convergence_csv(const std::filesystem::path& path,
                           const std::vector<double>& residuals) {
  report::CsvWriter csv(path, {"iteration", "residual"});
  for (std::size_t i = 0; i < residuals.size(); ++i)
    csv.row({report::format_number(static_cast<double>(i + 1)), report::format_number(residuals[i])});
}

void write_field_csv(const std::filesystem::path& path, const GridSpec& grid, const Field& field,
                     const std::string& column) {
  report::CsvWriter csv(path, {"t", "q", column});
  for (int i = 0; i < grid.n_t; ++i)
    for (int j = 0; j < grid.n_q; ++j)
      csv.row({report::format_number(grid.time(i)), report::format_number(grid.queue(j)),
               report::format_number(field(i, j))});
}

void write_interference_csv(const std::filesystem::path& path, const GridSpec& grid,
                            const Vector& interference) {
  report::CsvWriter csv(path, {"t", "interference_w"});
  for (int i = 0; i < grid.n_t; ++i)
    csv.row({report::format_number(grid.time(i)), report::format_number(interference(i))});
}

}  // namespace udn::mfg
