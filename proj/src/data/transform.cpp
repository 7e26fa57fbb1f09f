#include "unpaired/data/transform.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

#include "unpaired/data/mnist.hpp"
#include "unpaired/errors.hpp"

namespace unpaired {

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  size_t start = 0;
  while (true) {
    const size_t pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double parse_number(std::string_view token, std::string_view context) {
  double v = 0.0;
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, v);
  if (ec != std::errc{} || ptr != end || !std::isfinite(v))
    throw ConfigError("bad numeric parameter '" + std::string(token) + "' in '" + std::string(context) + "'");
  return v;
}

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

// Exact sin/cos for multiples of 90 degrees so quarter turns are pure permutations.
std::pair<double, double> exact_cos_sin(double degrees) {
  const double turns = degrees / 90.0;
  if (turns == std::floor(turns)) {
    const auto k = static_cast<int64_t>(std::fmod(std::fmod(turns, 4.0) + 4.0, 4.0));
    static constexpr std::array<std::pair<double, double>, 4> quarter{{{1, 0}, {0, 1}, {-1, 0}, {0, -1}}};
    return quarter[static_cast<size_t>(k)];
  }
  const double rad = degrees * std::numbers::pi / 180.0;
  return {std::cos(rad), std::sin(rad)};
}

// Bilinear sample of plane (H x W, row-major) at fractional (row, col); outside cells read `fill`.
double sample(const double* plane, int64_t h, int64_t w, double row, double col, double fill) {
  const double r0f = std::floor(row);
  const double c0f = std::floor(col);
  const double fr = row - r0f;
  const double fc = col - c0f;
  const auto r0 = static_cast<int64_t>(r0f);
  const auto c0 = static_cast<int64_t>(c0f);
  auto at = [&](int64_t r, int64_t c) {
    return (r >= 0 && r < h && c >= 0 && c < w) ? plane[r * w + c] : fill;
  };
  double acc = 0.0;
  if ((1 - fr) * (1 - fc) != 0.0) acc += (1 - fr) * (1 - fc) * at(r0, c0);
  if ((1 - fr) * fc != 0.0) acc += (1 - fr) * fc * at(r0, c0 + 1);
  if (fr * (1 - fc) != 0.0) acc += fr * (1 - fc) * at(r0 + 1, c0);
  if (fr * fc != 0.0) acc += fr * fc * at(r0 + 1, c0 + 1);
  return acc;
}

template <class Map>
void resample(std::vector<double>& planes, int64_t channels, int64_t h, int64_t w, double fill, Map&& src_of) {
  std::vector<double> out(planes.size());
  for (int64_t ch = 0; ch < channels; ++ch) {
    const double* in = planes.data() + ch * h * w;
    double* o = out.data() + ch * h * w;
    for (int64_t r = 0; r < h; ++r)
      for (int64_t c = 0; c < w; ++c) {
        auto [sr, sc] = src_of(static_cast<double>(r), static_cast<double>(c));
        o[r * w + c] = sample(in, h, w, sr, sc, fill);
      }
  }
  planes.swap(out);
}

}  // namespace

TransformSpec TransformSpec::parse(std::string_view text) {
  TransformSpec spec;
  text = trim(text);
  if (text.empty() || text == "none") return spec;
  for (auto raw : split(text, ',')) {
    const auto token = trim(raw);
    const auto parts = split(token, ':');
    const auto name = parts.front();
    const size_t nargs = parts.size() - 1;
    auto arg = [&](size_t i) { return parse_number(trim(parts[i + 1]), token); };
    if (name == "invert" && nargs == 0) {
      spec.ops.emplace_back(Invert{});
    } else if (name == "hflip" && nargs == 0) {
      spec.ops.emplace_back(HFlip{});
    } else if (name == "vflip" && nargs == 0) {
      spec.ops.emplace_back(VFlip{});
    } else if (name == "rotate" && nargs == 1) {
      spec.ops.emplace_back(Rotate{arg(0)});
    } else if (name == "stretch" && (nargs == 0 || nargs == 2)) {
      Stretch s;
      if (nargs == 2) s = Stretch{arg(0), arg(1)};
      if (!(s.sx > 0.0 && s.sy > 0.0)) throw ConfigError("stretch factors must be positive in '" + std::string(token) + "'");
      spec.ops.emplace_back(s);
    } else {
      throw ConfigError("unknown transform token '" + std::string(token) +
                        "' (expected invert, rotate:DEG, hflip, vflip, stretch[:SX:SY])");
    }
  }
  return spec;
}

std::string TransformSpec::to_string() const {
  std::ostringstream os;
  bool first = true;
  for (const auto& op : ops) {
    if (!first) os << ',';
    first = false;
    std::visit(
        [&](const auto& o) {
          using T = std::decay_t<decltype(o)>;
          if constexpr (std::is_same_v<T, Invert>) os << "invert";
          else if constexpr (std::is_same_v<T, HFlip>) os << "hflip";
          else if constexpr (std::is_same_v<T, VFlip>) os << "vflip";
          else if constexpr (std::is_same_v<T, Rotate>) os << "rotate:" << format_number(o.degrees);
          else os << "stretch:" << format_number(o.sx) << ':' << format_number(o.sy);
        },
        op);
  }
  return os.str();
}

torch::Tensor apply_transform(const torch::Tensor& image, const TransformSpec& spec) {
  TORCH_CHECK(image.dim() == 3, "apply_transform expects a C x H x W image");
  const int64_t channels = image.size(0), h = image.size(1), w = image.size(2);
  auto src = image.to(torch::kFloat64).contiguous();
  std::vector<double> planes(src.data_ptr<double>(), src.data_ptr<double>() + src.numel());

  const double cr = (static_cast<double>(h) - 1.0) / 2.0;
  const double cc = (static_cast<double>(w) - 1.0) / 2.0;
  double background = 0.0;

  for (const auto& op : spec.ops) {
    std::visit(
        [&](const auto& o) {
          using T = std::decay_t<decltype(o)>;
          if constexpr (std::is_same_v<T, Invert>) {
            for (auto& p : planes) p = 1.0 - p;
            background = 1.0 - background;
          } else if constexpr (std::is_same_v<T, HFlip>) {
            for (int64_t ch = 0; ch < channels; ++ch)
              for (int64_t r = 0; r < h; ++r) {
                double* row = planes.data() + (ch * h + r) * w;
                std::reverse(row, row + w);
              }
          } else if constexpr (std::is_same_v<T, VFlip>) {
            for (int64_t ch = 0; ch < channels; ++ch)
              for (int64_t r = 0; r < h / 2; ++r)
                std::swap_ranges(planes.begin() + (ch * h + r) * w, planes.begin() + (ch * h + r + 1) * w,
                                 planes.begin() + (ch * h + (h - 1 - r)) * w);
          } else if constexpr (std::is_same_v<T, Rotate>) {
            const auto [cs, sn] = exact_cos_sin(o.degrees);
            resample(planes, channels, h, w, background, [&](double r, double c) {
              const double dx = c - cc, dy = cr - r;
              const double sx = cs * dx + sn * dy;
              const double sy = -sn * dx + cs * dy;
              return std::pair{cr - sy, cc + sx};
            });
          } else {
            resample(planes, channels, h, w, background, [&](double r, double c) {
              return std::pair{cr + (r - cr) / o.sy, cc + (c - cc) / o.sx};
            });
          }
        },
        op);
  }
  for (double p : planes)
    if (!std::isfinite(p)) throw NumericError("non-finite pixel after resampling");
  auto out = torch::from_blob(planes.data(), {channels, h, w}, torch::kFloat64).clone();
  return snap_pixels(out).to(torch::kFloat32);
}

torch::Tensor apply_transform_batch(const torch::Tensor& images, const TransformSpec& spec) {
  TORCH_CHECK(images.dim() == 4, "apply_transform_batch expects N x C x H x W");
  if (spec.empty()) return images.clone();
  auto out = torch::empty_like(images, torch::kFloat32);
  for (int64_t i = 0; i < images.size(0); ++i) out[i].copy_(apply_transform(images[i], spec));
  return out;
}

}  // namespace unpaired
