#include "spatialqa/fusion.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace spatialqa {

namespace {

long double loss_of(const FusionWeights<long double>& w, const Matrix<long double>& hv,
                    const Matrix<long double>& z3d) {
  long double s = 0;
  for (long double x : fuse_forward_trace(hv, z3d, w).out.data) s += x;
  return s;
}

struct ParamView {
  const char* name;
  std::vector<long double>* values;
  const std::vector<long double>* grads;
  std::size_t cols;
};

}  // namespace

GradCheckResult grad_check(const FusionWeights<long double>& w, const GradCheckInputs& in, long double step) {
  const Matrix<long double> z3d = build_unified_3d(in.geometry, in.view);
  const auto trace = fuse_forward_trace(in.hv, z3d, w);
  const FusionWeights<long double> g = fuse_backward(in.hv, z3d, w, trace);

  FusionWeights<long double> probe = w;
  const ParamView params[] = {
      {"W_Q", &probe.wq.data, &g.wq.data, probe.wq.cols}, {"W_K", &probe.wk.data, &g.wk.data, probe.wk.cols},
      {"W_V", &probe.wv.data, &g.wv.data, probe.wv.cols}, {"W_1", &probe.w1.data, &g.w1.data, probe.w1.cols},
      {"b_1", &probe.b1, &g.b1, probe.b1.size()},        {"W_2", &probe.w2.data, &g.w2.data, probe.w2.cols},
      {"b_2", &probe.b2, &g.b2, probe.b2.size()},
  };

  GradCheckResult result;
  for (const ParamView& p : params) {
    for (std::size_t i = 0; i < p.values->size(); ++i) {
      const long double saved = (*p.values)[i];
      (*p.values)[i] = saved + step;
      const long double up = loss_of(probe, in.hv, z3d);
      (*p.values)[i] = saved - step;
      const long double down = loss_of(probe, in.hv, z3d);
      (*p.values)[i] = saved;

      const long double numeric = (up - down) / (2 * step);
      const long double analytic = (*p.grads)[i];
      const long double denom = std::max({1.0L, std::fabs(analytic), std::fabs(numeric)});
      const long double rel = std::fabs(analytic - numeric) / denom;
      ++result.entries;
      if (rel > result.max_rel_error || result.worst_param.empty()) {
        result.max_rel_error = std::max(rel, result.max_rel_error);
        result.worst_param = fmt::format("{}[{},{}]", p.name, i / p.cols, i % p.cols);
      }
    }
  }
  return result;
}

GradCheckFixture grad_check_fixture(std::uint64_t seed, std::size_t tokens, std::size_t width, bool linear) {
  const std::string key = fmt::format("gradcheck/{}", seed);
  GradCheckFixture fx;
  FusionDims d{width, width, width, width, width};
  fx.weights = random_weights<long double>(d, key + "/w", linear ? Activation::Identity : Activation::Silu);
  fx.inputs.hv = random_matrix<long double>(tokens, width, key + "/hv");
  // linear: Z is the view token alone, so every softmax row is exactly [1]
  fx.inputs.geometry = random_matrix<long double>(linear ? 0 : tokens - 1, width, key + "/f");
  fx.inputs.view = random_matrix<long double>(1, width, key + "/z");
  return fx;
}

std::string encode_token_matrix(const TokenMatrix& m) {
  if (m.rows == 0 || m.cols == 0 || m.rows > UINT32_MAX || m.cols > UINT32_MAX) {
    throw Error(ErrorCode::InvalidArgument, "token matrix needs positive 32-bit dimensions");
  }
  std::string out = "TMAT";
  auto put_u32 = [&](std::uint32_t v) {
    for (int b = 0; b < 4; ++b) out += static_cast<char>((v >> (8 * b)) & 0xFF);
  };
  put_u32(static_cast<std::uint32_t>(m.rows));
  put_u32(static_cast<std::uint32_t>(m.cols));
  for (double x : m.data) {
    const auto bits = std::bit_cast<std::uint64_t>(x);
    for (int b = 0; b < 8; ++b) out += static_cast<char>((bits >> (8 * b)) & 0xFF);
  }
  return out;
}

TokenMatrix decode_token_matrix(std::string_view bytes) {
  if (bytes.size() < 12 || bytes.substr(0, 4) != "TMAT") {
    throw Error(ErrorCode::MalformedHeader, "token matrix: missing TMAT header");
  }
  auto get = [&](std::size_t offset, int width) {
    std::uint64_t v = 0;
    for (int b = 0; b < width; ++b) v |= std::uint64_t{static_cast<unsigned char>(bytes[offset + b])} << (8 * b);
    return v;
  };
  const std::size_t rows = get(4, 4);
  const std::size_t cols = get(8, 4);
  if (rows == 0 || cols == 0) throw Error(ErrorCode::MalformedHeader, "token matrix: zero dimension");
  const std::size_t want = 12 + rows * cols * 8;
  if (bytes.size() < want) {
    throw Error(ErrorCode::TruncatedBody,
                fmt::format("token matrix: {}x{} needs {} bytes, got {}", rows, cols, want, bytes.size()));
  }
  TokenMatrix m(rows, cols);
  for (std::size_t i = 0; i < m.data.size(); ++i) {
    m.data[i] = std::bit_cast<double>(get(12 + 8 * i, 8));
    if (!std::isfinite(m.data[i])) {
      throw Error(ErrorCode::InvalidArgument, fmt::format("token matrix: non-finite entry at byte {}", 12 + 8 * i));
    }
  }
  return m;
}

void write_token_matrix(const std::filesystem::path& path, const TokenMatrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, fmt::format("cannot write {}", path.string()));
  const std::string bytes = encode_token_matrix(m);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

TokenMatrix read_token_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, fmt::format("cannot read {}", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return decode_token_matrix(buf.str());
  } catch (const Error& e) {
    throw Error(e.code(), fmt::format("{}: {}", path.string(), e.detail()));
  }
}

}  // namespace spatialqa
