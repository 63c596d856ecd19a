#include "mrloc/room_acoustics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "mrloc/error.hpp"

namespace mrloc {

namespace {

constexpr double kPi = std::numbers::pi;

std::string fmt_point(const Point& p) {
  return "(" + std::to_string(p.x) + ", " + std::to_string(p.y) + ", " + std::to_string(p.z) + ")";
}

// Visits every image source of `source` (as seen from `mic`) that lies within
// `max_distance` and respects the order limit. Enumeration order depends only
// on the lattice extent, never on the order limit, so truncating the order
// removes contributions without reordering the rest.
template <typename Fn>
void for_each_image(const RoomSpec& room, const Point& source, const Point& mic, double max_distance,
                    Fn&& fn) {
  const auto& L = room.dimensions;
  const auto& beta = room.reflection;
  const double s[3] = {source.x, source.y, source.z};
  const double r[3] = {mic.x, mic.y, mic.z};
  int extent[3];
  for (int a = 0; a < 3; ++a) extent[a] = static_cast<int>(std::ceil(max_distance / (2.0 * L[a]))) + 1;

  // powers[w][n] = beta_w^n for every hit count the lattice can produce
  std::array<std::vector<double>, 6> powers;
  for (int w = 0; w < 6; ++w) {
    const int max_hits = extent[w / 2] + 1;
    powers[w].resize(static_cast<std::size_t>(max_hits) + 1);
    powers[w][0] = 1.0;
    for (int n = 1; n <= max_hits; ++n) powers[w][n] = powers[w][n - 1] * beta[w];
  }

  ImageSource img;
  for (int mx = -extent[0]; mx <= extent[0]; ++mx) {
    for (int my = -extent[1]; my <= extent[1]; ++my) {
      for (int mz = -extent[2]; mz <= extent[2]; ++mz) {
        const int m[3] = {mx, my, mz};
        for (int q = 0; q <= 1; ++q) {
          for (int j = 0; j <= 1; ++j) {
            for (int k = 0; k <= 1; ++k) {
              const int par[3] = {q, j, k};
              double pos[3];
              double refl = 1.0;
              int order = 0;
              double d2 = 0.0;
              for (int a = 0; a < 3; ++a) {
                pos[a] = (1 - 2 * par[a]) * s[a] + 2.0 * m[a] * L[a];
                const double diff = pos[a] - r[a];
                d2 += diff * diff;
                order += std::abs(2 * m[a] - par[a]);
                refl *= powers[2 * a][std::abs(m[a] - par[a])] * powers[2 * a + 1][std::abs(m[a])];
              }
              if (room.max_image_order >= 0 && order > room.max_image_order) continue;
              const double dist = std::sqrt(d2);
              if (dist >= max_distance) continue;
              img.position = {pos[0], pos[1], pos[2]};
              img.cell = {mx, my, mz};
              img.mirror = {q, j, k};
              img.order = order;
              img.distance = dist;
              img.gain = refl / (4.0 * kPi * dist);
              fn(img);
            }
          }
        }
      }
    }
  }
}

void check_inside(const RoomSpec& room, const Point& p, const char* what) {
  if (!room.contains(p)) throw GeometryError(std::string(what) + " " + fmt_point(p) + " is not strictly inside the room");
}

// Hann-windowed sinc at t = m - frac, support |t| < half_width.
double windowed_sinc(int m, double frac, int half_width) {
  const double t = m - frac;
  if (t == std::round(t)) return t == 0.0 ? 1.0 : 0.0;
  if (std::abs(t) >= half_width) return 0.0;
  const double window = 0.5 * (1.0 + std::cos(kPi * t / half_width));
  return window * std::sin(kPi * t) / (kPi * t);
}

// Kernel rows sampled at kSincSteps + 1 fractional offsets; taps in between are
// linearly interpolated along the offset (error below 1e-5 of the peak). Row 0
// is an exact unit impulse, so integer delays stay exact.
constexpr int kSincSteps = 1024;

struct SincTable {
  int half_width = 0;
  std::vector<double> value, slope;  // (kSincSteps + 1) rows of 2 * half_width taps
};

std::shared_ptr<const SincTable> sinc_table(int half_width) {
  static std::mutex mutex;
  static std::map<int, std::shared_ptr<const SincTable>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[half_width];
  if (!slot) {
    auto table = std::make_shared<SincTable>();
    table->half_width = half_width;
    const std::size_t width = 2 * static_cast<std::size_t>(half_width);
    table->value.resize((kSincSteps + 1) * width);
    table->slope.resize((kSincSteps + 1) * width, 0.0);
    for (int k = 0; k <= kSincSteps; ++k)
      for (int m = 1 - half_width; m <= half_width; ++m)
        table->value[k * width + (m + half_width - 1)] = windowed_sinc(m, static_cast<double>(k) / kSincSteps, half_width);
    for (int k = 0; k < kSincSteps; ++k)
      for (std::size_t i = 0; i < width; ++i)
        table->slope[k * width + i] = table->value[(k + 1) * width + i] - table->value[k * width + i];
    slot = std::move(table);
  }
  return slot;
}

// Adds gain * w(t) * sinc(t) for t = n - delay over the kernel support.
void add_windowed_sinc(std::vector<double>& taps, double delay, double gain, const SincTable& table) {
  const int half_width = table.half_width;
  const double fl = std::floor(delay);
  const double pos = (delay - fl) * kSincSteps;
  const int k = std::min(static_cast<int>(pos), kSincSteps - 1);
  const double alpha = pos - k;
  const std::size_t width = 2 * static_cast<std::size_t>(half_width);
  const double* value = &table.value[k * width];
  const double* slope = &table.slope[k * width];

  const long first = static_cast<long>(fl) + 1 - half_width;
  const long n_taps = static_cast<long>(taps.size());
  const long lo = std::max(0L, -first);
  const long hi = std::min(static_cast<long>(width), n_taps - first);
  for (long i = lo; i < hi; ++i) taps[static_cast<std::size_t>(first + i)] += gain * (value[i] + alpha * slope[i]);
}

}  // namespace

double distance(const Point& a, const Point& b) {
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

void RoomSpec::validate() const {
  for (double d : dimensions)
    if (!(d > 0.0) || !std::isfinite(d)) throw GeometryError("room dimensions must be strictly positive");
  for (double b : reflection)
    if (!(b >= 0.0 && b <= 1.0)) throw GeometryError("reflection coefficients must lie in [0, 1]");
  if (!(speed_of_sound > 0.0)) throw GeometryError("speed of sound must be positive");
  if (!(sample_rate > 0.0)) throw GeometryError("sample rate must be positive");
  if (rir_length == 0) throw GeometryError("zero-length impulse response requested");
  if (sinc_half_width < 1) throw GeometryError("sinc half-width must be at least one tap");
}

bool RoomSpec::contains(const Point& p) const {
  return p.x > 0.0 && p.x < dimensions[0] && p.y > 0.0 && p.y < dimensions[1] && p.z > 0.0 &&
         p.z < dimensions[2];
}

double RoomSpec::volume() const { return dimensions[0] * dimensions[1] * dimensions[2]; }

double RoomSpec::surface_area() const {
  const auto& d = dimensions;
  return 2.0 * (d[0] * d[1] + d[0] * d[2] + d[1] * d[2]);
}

double reflection_for_t60(const std::array<double, 3>& dimensions, double t60_s, double speed_of_sound) {
  if (t60_s <= 0.0) return 0.0;
  const double volume = dimensions[0] * dimensions[1] * dimensions[2];
  const double area = 2.0 * (dimensions[0] * dimensions[1] + dimensions[0] * dimensions[2] +
                             dimensions[1] * dimensions[2]);
  const double alpha = 24.0 * std::log(10.0) * volume / (speed_of_sound * area * t60_s);
  if (alpha > 1.0)
    throw GeometryError("T60 of " + std::to_string(t60_s) + " s is below what this room can reach");
  return std::sqrt(1.0 - alpha);
}

double sabine_t60(const RoomSpec& room) {
  const auto& d = room.dimensions;
  const double wall_area[6] = {d[1] * d[2], d[1] * d[2], d[0] * d[2], d[0] * d[2], d[0] * d[1], d[0] * d[1]};
  double absorption = 0.0;
  for (int w = 0; w < 6; ++w) absorption += wall_area[w] * (1.0 - room.reflection[w] * room.reflection[w]);
  if (absorption <= 0.0) return std::numeric_limits<double>::infinity();
  return 24.0 * std::log(10.0) * room.volume() / (room.speed_of_sound * absorption);
}

RoomSpec room_with_t60(const std::array<double, 3>& dimensions, double t60_s, double speed_of_sound,
                       double sample_rate) {
  RoomSpec room;
  room.dimensions = dimensions;
  room.speed_of_sound = speed_of_sound;
  room.sample_rate = sample_rate;
  room.reflection.fill(reflection_for_t60(dimensions, t60_s, speed_of_sound));
  return room;
}

std::vector<ImageSource> image_sources(const RoomSpec& room, const Point& source, const Point& mic,
                                       double max_distance) {
  std::vector<ImageSource> out;
  for_each_image(room, source, mic, max_distance, [&](const ImageSource& img) { out.push_back(img); });
  return out;
}

std::size_t default_rir_length(const RoomSpec& room, const Point& source, const Point& mic) {
  const double fs = room.sample_rate;
  const double c = room.speed_of_sound;
  const auto direct = static_cast<std::size_t>(std::ceil(distance(source, mic) * fs / c));
  const std::size_t minimum = direct + static_cast<std::size_t>(room.sinc_half_width) + 1;

  const double t60 = sabine_t60(room);
  if (!std::isfinite(t60)) throw GeometryError("lossless room: RIR length must be set explicitly");
  std::size_t length = static_cast<std::size_t>(std::ceil(t60 * fs));

  if (room.max_image_order >= 0) {
    // Latest arrival among the finitely many images within the order limit;
    // an order-n image is at most (n + 1) room diagonals away.
    const auto& d = room.dimensions;
    const double diag = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
    const double reach = 2.0 * (room.max_image_order + 1) * diag + 1.0;
    double latest = 0.0;
    for_each_image(room, source, mic, reach, [&](const ImageSource& img) { latest = std::max(latest, img.distance); });
    const auto cap = static_cast<std::size_t>(std::ceil(latest * fs / c)) + room.sinc_half_width + 1;
    length = std::min(length, cap);
  }
  return std::max(length, minimum);
}

ImpulseResponse simulate_rir(const RoomSpec& room, const Point& source, const Point& mic) {
  room.validate();
  check_inside(room, source, "source");
  check_inside(room, mic, "microphone");
  if (source == mic) throw GeometryError("source and microphone coincide");

  const std::size_t length =
      room.rir_length > 0 ? static_cast<std::size_t>(room.rir_length) : default_rir_length(room, source, mic);
  const double fs = room.sample_rate;
  const double c = room.speed_of_sound;

  ImpulseResponse rir;
  rir.sample_rate = fs;
  rir.taps.assign(length, 0.0);

  if (room.interpolation == FractionalDelay::Nearest) {
    const double max_distance = (static_cast<double>(length) - 0.5) * c / fs;
    for_each_image(room, source, mic, max_distance, [&](const ImageSource& img) {
      if (img.gain == 0.0) return;
      const auto n = static_cast<std::size_t>(std::lround(img.distance * fs / c));
      if (n < length) rir.taps[n] += img.gain;
    });
  } else {
    const double max_distance = (static_cast<double>(length) + room.sinc_half_width) * c / fs;
    const auto table = sinc_table(room.sinc_half_width);
    for_each_image(room, source, mic, max_distance, [&](const ImageSource& img) {
      if (img.gain == 0.0) return;
      add_windowed_sinc(rir.taps, img.distance * fs / c, img.gain, *table);
    });
  }
  return rir;
}

std::vector<double> schroeder_curve(std::span<const double> taps) {
  std::vector<double> edc(taps.size());
  double acc = 0.0;
  for (std::size_t i = taps.size(); i-- > 0;) {
    acc += taps[i] * taps[i];
    edc[i] = acc;
  }
  const double total = edc.empty() ? 0.0 : edc.front();
  for (double& e : edc) e = (total > 0.0 && e > 0.0) ? 10.0 * std::log10(e / total) : -std::numeric_limits<double>::infinity();
  return edc;
}

double schroeder_t60(const ImpulseResponse& rir, double upper_db, double lower_db) {
  const auto edc = schroeder_curve(rir.taps);
  double st = 0.0, se = 0.0, stt = 0.0, ste = 0.0;
  std::size_t count = 0;
  for (std::size_t n = 0; n < edc.size(); ++n) {
    if (edc[n] > upper_db || edc[n] < lower_db) continue;
    const double t = static_cast<double>(n) / rir.sample_rate;
    st += t;
    se += edc[n];
    stt += t * t;
    ste += t * edc[n];
    ++count;
  }
  if (count < 2) throw SignalError("decay curve does not span the fitting range");
  const double cnt = static_cast<double>(count);
  const double slope = (cnt * ste - st * se) / (cnt * stt - st * st);
  if (!(slope < 0.0)) throw SignalError("decay curve is not decreasing");
  return -60.0 / slope;
}

void Constellation::validate(const RoomSpec& room) const {
  if (mic1 == mic2) throw GeometryError("microphones coincide");
  if (!(azimuth_low < azimuth_high)) throw GeometryError("azimuth range must satisfy low < high");
  if (!(rotation_deg >= 0.0 && rotation_deg < 360.0)) throw GeometryError("rotation must lie in [0, 360)");
  if (!(source_radius > 0.0)) throw GeometryError("source radius must be positive");
  check_inside(room, mic1, "microphone 1");
  check_inside(room, rotated_mic2(), "microphone 2");
  const double step = 0.1;
  for (double az = azimuth_low;; az += step) {
    const double a = std::min(az, azimuth_high);
    const double phi = (a + rotation_deg) * kPi / 180.0;
    const Point p{mic1.x + source_radius * std::cos(phi), mic1.y + source_radius * std::sin(phi), mic1.z};
    if (!room.contains(p))
      throw GeometryError("source arc leaves the room at azimuth " + std::to_string(a) + " deg");
    if (a >= azimuth_high) break;
  }
}

Point Constellation::rotated_mic2() const {
  const double phi = rotation_deg * kPi / 180.0;
  const double dx = mic2.x - mic1.x, dy = mic2.y - mic1.y;
  return {mic1.x + dx * std::cos(phi) - dy * std::sin(phi), mic1.y + dx * std::sin(phi) + dy * std::cos(phi), mic2.z};
}

double Constellation::mic_spacing() const { return distance(mic1, mic2); }

double Constellation::mic_axis_azimuth() const {
  return std::atan2(mic2.y - mic1.y, mic2.x - mic1.x) * 180.0 / kPi;
}

Point azimuth_to_position(const Constellation& cons, double azimuth_deg) {
  constexpr double tol = 1e-9;
  if (azimuth_deg < cons.azimuth_low - tol || azimuth_deg > cons.azimuth_high + tol)
    throw GeometryError("azimuth " + std::to_string(azimuth_deg) + " deg outside the constellation range");
  const double phi = (azimuth_deg + cons.rotation_deg) * kPi / 180.0;
  return {cons.mic1.x + cons.source_radius * std::cos(phi), cons.mic1.y + cons.source_radius * std::sin(phi),
          cons.mic1.z};
}

double geometric_tdoa(const Constellation& cons, const Point& source, double speed_of_sound) {
  return (distance(source, cons.rotated_mic2()) - distance(source, cons.mic1)) / speed_of_sound;
}

void write_rir_binary(const std::string& path, const ImpulseResponse& rir) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  const char magic[4] = {'R', 'I', 'R', '1'};
  const std::uint64_t n = rir.taps.size();
  out.write(magic, 4);
  out.write(reinterpret_cast<const char*>(&rir.sample_rate), sizeof(double));
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  out.write(reinterpret_cast<const char*>(rir.taps.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!out) throw IoError("failed writing " + path);
}

ImpulseResponse read_rir_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[4];
  std::uint64_t n = 0;
  ImpulseResponse rir;
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "RIR1", 4) != 0) throw IoError(path + " is not an RIR file");
  in.read(reinterpret_cast<char*>(&rir.sample_rate), sizeof(double));
  in.read(reinterpret_cast<char*>(&n), sizeof(n));
  if (!in || n > (std::uint64_t{1} << 32)) throw IoError(path + ": corrupt header");
  rir.taps.resize(n);
  in.read(reinterpret_cast<char*>(rir.taps.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw IoError(path + ": truncated data");
  return rir;
}

}  // namespace mrloc
