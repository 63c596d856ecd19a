#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace mrloc {

struct Point {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

double distance(const Point& a, const Point& b);

enum class FractionalDelay {
  WindowedSinc,  // Hann-windowed sinc of fixed half-width
  Nearest,       // round to the nearest sample (free-field checks only)
};

// Shoebox room. Walls are ordered x=0, x=Lx, y=0, y=Ly, z=0, z=Lz.
struct RoomSpec {
  std::array<double, 3> dimensions{6.0, 6.2, 3.0};
  std::array<double, 6> reflection{};
  double speed_of_sound = 343.0;
  double sample_rate = 16000.0;
  // Highest reflection order kept; -1 keeps every image inside the RIR length.
  int max_image_order = -1;
  // Number of taps; negative selects default_rir_length(). Zero is rejected.
  long rir_length = -1;
  FractionalDelay interpolation = FractionalDelay::WindowedSinc;
  int sinc_half_width = 32;

  // Throws GeometryError on a violated invariant.
  void validate() const;
  bool contains(const Point& p) const;
  double volume() const;
  double surface_area() const;
};

struct ImpulseResponse {
  std::vector<double> taps;
  double sample_rate = 0.0;
};

// Uniform amplitude reflection coefficient giving `t60_s` under Sabine's
// formula. Throws GeometryError when the requested T60 would need an
// absorption coefficient above 1.
double reflection_for_t60(const std::array<double, 3>& dimensions, double t60_s,
                          double speed_of_sound = 343.0);

// Sabine reverberation time implied by the room's reflection coefficients
// (area-weighted absorption). Infinite for a lossless room.
double sabine_t60(const RoomSpec& room);

RoomSpec room_with_t60(const std::array<double, 3>& dimensions, double t60_s,
                       double speed_of_sound = 343.0, double sample_rate = 16000.0);

struct ImageSource {
  Point position;
  std::array<int, 3> cell{};    // lattice index (mx, my, mz)
  std::array<int, 3> mirror{};  // parity flags (q, j, k)
  int order = 0;                // number of wall reflections
  double distance = 0.0;        // meters to the microphone
  double gain = 0.0;            // reflection product / (4 pi distance)
};

// Image sources whose arrival lies before `max_distance` meters (and whose
// order does not exceed room.max_image_order), in a fixed enumeration order.
std::vector<ImageSource> image_sources(const RoomSpec& room, const Point& source,
                                       const Point& mic, double max_distance);

std::size_t default_rir_length(const RoomSpec& room, const Point& source, const Point& mic);

ImpulseResponse simulate_rir(const RoomSpec& room, const Point& source, const Point& mic);

// Schroeder backward-integrated energy decay in dB (0 dB at n = 0).
std::vector<double> schroeder_curve(std::span<const double> taps);

// T60 estimated by a least-squares line through the Schroeder curve between
// `upper_db` and `lower_db`, extrapolated to 60 dB of decay.
double schroeder_t60(const ImpulseResponse& rir, double upper_db = -5.0, double lower_db = -25.0);

// Two-microphone constellation with sources on a circle around mic1 at
// mic1's height. Azimuth 0 points along +x; `rotation_deg` rotates mic2 and
// every source position about mic1.
struct Constellation {
  Point mic1{3.0, 3.0, 1.0};
  Point mic2{3.2, 3.0, 1.0};
  double source_radius = 2.0;
  double azimuth_low = 10.0;
  double azimuth_high = 60.0;
  double rotation_deg = 0.0;

  void validate(const RoomSpec& room) const;
  // mic2 after applying the rotation.
  Point rotated_mic2() const;
  double mic_spacing() const;
  // Azimuth (degrees, before rotation) of the mic1 -> mic2 axis.
  double mic_axis_azimuth() const;
};

Point azimuth_to_position(const Constellation& cons, double azimuth_deg);

// (|source - mic2| - |source - mic1|) / c, using the rotated mic2.
double geometric_tdoa(const Constellation& cons, const Point& source, double speed_of_sound = 343.0);

// Raw little-endian dump: u32 magic "RIR1", f64 sample rate, u64 length,
// f64 taps.
void write_rir_binary(const std::string& path, const ImpulseResponse& rir);
ImpulseResponse read_rir_binary(const std::string& path);

}  // namespace mrloc
