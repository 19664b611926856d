#include "qkd/polarization.hpp"

#include <cctype>
#include <cmath>
#include <numbers>

#include "qkd/error.hpp"

namespace qkd {

char to_char(Bit b) noexcept { return b == Bit::Zero ? '0' : '1'; }

char to_char(Trit t) noexcept {
  switch (t) {
    case Trit::Zero: return '0';
    case Trit::One: return '1';
    case Trit::Uncertain: return '?';
  }
  return '?';
}

std::string_view to_string(Basis b) noexcept { return b == Basis::HV ? "HV" : "DAD"; }

std::string to_string(const BitString& bits) {
  std::string out;
  out.reserve(bits.size());
  for (Bit b : bits) out.push_back(to_char(b));
  return out;
}

std::string to_string(const std::vector<Trit>& trits) {
  std::string out;
  out.reserve(trits.size());
  for (Trit t : trits) out.push_back(to_char(t));
  return out;
}

BitString parse_bits(std::string_view text) {
  BitString bits;
  bits.reserve(text.size());
  for (char c : text) {
    if (c == '0') {
      bits.push_back(Bit::Zero);
    } else if (c == '1') {
      bits.push_back(Bit::One);
    } else {
      throw Error(Errc::InvalidArgument, "bit string may only contain '0' and '1'");
    }
  }
  return bits;
}

Basis parse_basis(std::string_view text) {
  std::string upper;
  for (char c : text) upper.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (upper == "HV" || upper == "H" || upper == "H/V") return Basis::HV;
  if (upper == "DAD" || upper == "D" || upper == "D/AD") return Basis::DAD;
  throw Error(Errc::InvalidArgument, "unknown basis '" + std::string(text) + "'");
}

std::vector<Basis> parse_bases(std::string_view letters) {
  std::vector<Basis> out;
  out.reserve(letters.size());
  for (char c : letters) out.push_back(parse_basis(std::string_view(&c, 1)));
  return out;
}

PolarizationAngle::PolarizationAngle(double degrees) {
  if (!std::isfinite(degrees)) throw Error(Errc::InvalidArgument, "polarization angle must be finite");
  double d = std::fmod(degrees, 180.0);
  if (d < 0.0) d += 180.0;
  // -tiny + 180 can round up to exactly 180
  if (d >= 180.0) d = 0.0;
  degrees_ = d;
}

double PolarizationAngle::distance_to(PolarizationAngle other) const noexcept {
  const double d = std::fabs(degrees_ - other.degrees_);
  return d > 90.0 ? 180.0 - d : d;
}

EncodingTable::EncodingTable()
    : angles_{{{PolarizationAngle(0.0), PolarizationAngle(90.0)},
               {PolarizationAngle(45.0), PolarizationAngle(135.0)}}} {}

EncodingTable::EncodingTable(const std::array<std::array<PolarizationAngle, 2>, 2>& angles) : angles_(angles) {
  for (const auto& pair : angles_) {
    if (std::fabs(pair[0].distance_to(pair[1]) - 90.0) > PolarizationAngle::kTolerance) {
      throw Error(Errc::InvalidConfig, "basis states must be orthogonal");
    }
  }
  const std::array<PolarizationAngle, 4> all{angles_[0][0], angles_[0][1], angles_[1][0], angles_[1][1]};
  for (std::size_t i = 0; i < all.size(); ++i) {
    for (std::size_t j = i + 1; j < all.size(); ++j) {
      if (all[i].approx_equal(all[j])) throw Error(Errc::InvalidConfig, "encoding table must be a bijection");
    }
  }
}

std::string state_name(PolarizationAngle angle) {
  static const EncodingTable kDefault;
  static constexpr const char* kNames[2][2] = {{"H", "V"}, {"D", "AD"}};
  for (Basis basis : {Basis::HV, Basis::DAD}) {
    for (Bit bit : {Bit::Zero, Bit::One}) {
      if (kDefault.angle(bit, basis).approx_equal(angle)) {
        return kNames[static_cast<int>(basis)][static_cast<int>(bit)];
      }
    }
  }
  return std::to_string(angle.degrees());
}

PolarizationAngle encode_state(Bit bit, Basis basis, const EncodingTable& table) { return table.angle(bit, basis); }

Bit decode_state(PolarizationAngle angle, Basis basis, const EncodingTable& table) {
  if (angle.approx_equal(table.angle(Bit::Zero, basis))) return Bit::Zero;
  if (angle.approx_equal(table.angle(Bit::One, basis))) return Bit::One;
  throw Error(Errc::NotABasisState,
              std::to_string(angle.degrees()) + " deg is not an eigenstate of basis " + std::string(to_string(basis)));
}

double transmission_fraction(PolarizationAngle state, PolarizationAngle analyzer) noexcept {
  const double delta = (state.degrees() - analyzer.degrees()) * std::numbers::pi / 180.0;
  const double c = std::cos(delta);
  return c * c;
}

PhotonMeasurement measure_photon(PolarizationAngle state, Basis basis, const EncodingTable& table,
                                 RandomSource& rng) {
  const PolarizationAngle zero_state = table.angle(Bit::Zero, basis);
  double p_zero = transmission_fraction(state, zero_state);
  // eigenstates are deterministic, not "almost surely"
  constexpr double kSnap = 1e-12;
  if (p_zero < kSnap) p_zero = 0.0;
  if (p_zero > 1.0 - kSnap) p_zero = 1.0;
  if (rng.uniform() < p_zero) return {Bit::Zero, zero_state};
  return {Bit::One, table.angle(Bit::One, basis)};
}

}  // namespace qkd
