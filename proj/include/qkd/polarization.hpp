#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qkd/random.hpp"

namespace qkd {

enum class Bit : std::uint8_t { Zero = 0, One = 1 };
enum class Basis : std::uint8_t { HV = 0, DAD = 1 };
enum class Trit : std::uint8_t { Zero = 0, One = 1, Uncertain = 2 };

using BitString = std::vector<Bit>;

inline constexpr Bit flip(Bit b) noexcept { return b == Bit::Zero ? Bit::One : Bit::Zero; }
inline constexpr Basis other(Basis b) noexcept { return b == Basis::HV ? Basis::DAD : Basis::HV; }
inline constexpr Trit to_trit(Bit b) noexcept { return b == Bit::Zero ? Trit::Zero : Trit::One; }
inline constexpr Bit bit_from(bool v) noexcept { return v ? Bit::One : Bit::Zero; }

char to_char(Bit b) noexcept;
char to_char(Trit t) noexcept;       // '0', '1', '?'
std::string_view to_string(Basis b) noexcept;  // "HV" / "DAD"

std::string to_string(const BitString& bits);
std::string to_string(const std::vector<Trit>& trits);
// Parses a string over {'0','1'}; throws InvalidArgument otherwise.
BitString parse_bits(std::string_view text);
// Accepts "HV"/"DAD" (any case) and the single letters 'h'/'d'.
Basis parse_basis(std::string_view text);
std::vector<Basis> parse_bases(std::string_view letters);

// Linear polarization orientation, normalized into [0, 180) degrees.
class PolarizationAngle {
 public:
  static constexpr double kTolerance = 1e-9;

  PolarizationAngle() = default;
  explicit PolarizationAngle(double degrees);

  double degrees() const noexcept { return degrees_; }
  PolarizationAngle rotated(double delta_degrees) const { return PolarizationAngle(degrees_ + delta_degrees); }

  // Orientation distance modulo 180, in [0, 90].
  double distance_to(PolarizationAngle other) const noexcept;
  bool approx_equal(PolarizationAngle other, double tolerance = kTolerance) const noexcept {
    return distance_to(other) <= tolerance;
  }

  bool operator==(const PolarizationAngle&) const = default;

 private:
  double degrees_ = 0.0;
};

// Maps (bit, basis) to a polarization state. The default table uses
// H=0, V=90, D=45, AD=135.
class EncodingTable {
 public:
  EncodingTable();
  // angles[basis][bit]; throws InvalidConfig unless each basis pair is
  // orthogonal and all four angles are distinct.
  explicit EncodingTable(const std::array<std::array<PolarizationAngle, 2>, 2>& angles);

  PolarizationAngle angle(Bit bit, Basis basis) const noexcept {
    return angles_[static_cast<int>(basis)][static_cast<int>(bit)];
  }

 private:
  std::array<std::array<PolarizationAngle, 2>, 2> angles_;
};

// "H", "V", "D", "AD" for states of the default table, otherwise the angle in degrees.
std::string state_name(PolarizationAngle angle);

PolarizationAngle encode_state(Bit bit, Basis basis, const EncodingTable& table = {});

// Throws NotABasisState unless `angle` is one of the basis' two table states.
Bit decode_state(PolarizationAngle angle, Basis basis, const EncodingTable& table = {});

// Malus's law: cos^2 of the angle between state and analyzer axis.
double transmission_fraction(PolarizationAngle state, PolarizationAngle analyzer) noexcept;

struct PhotonMeasurement {
  Bit bit;
  PolarizationAngle collapsed;
};

// Projective single-photon measurement in `basis`; the photon collapses onto
// one of the basis' eigenstates.
PhotonMeasurement measure_photon(PolarizationAngle state, Basis basis, const EncodingTable& table,
                                 RandomSource& rng);

}  // namespace qkd
