#include "wasgd/averaging.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "wasgd/error.hpp"

namespace wasgd {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string format_number(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

double parse_number(std::string_view text, std::string_view what) {
    double value = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end) {
        throw ConfigError("cannot parse " + std::string(what) + " from '" + std::string(text) + "'");
    }
    return value;
}

// Parses "key=value" and checks the key.
double parse_parameter(std::string_view args, std::string_view key) {
    const auto eq = args.find('=');
    if (eq == std::string_view::npos || args.substr(0, eq) != key) {
        throw ConfigError("expected '" + std::string(key) + "=<value>', got '" + std::string(args) + "'");
    }
    return parse_number(args.substr(eq + 1), key);
}

// (i+1)^alpha - i^alpha without cancellation.
double power_increment(std::size_t i, double alpha) {
    const double x = static_cast<double>(i);
    return std::pow(x, alpha) * std::expm1(alpha * std::log1p(1.0 / x));
}

double adaptive_weight(std::size_t i, std::size_t n, double alpha) {
    if (i == n) return std::pow(static_cast<double>(n), alpha - 1.0);
    return (1.0 - power_increment(i, alpha)) / static_cast<double>(n);
}

}  // namespace

SchemeConfig parse_scheme(std::string_view text, double schedule_alpha) {
    const auto colon = text.find(':');
    const std::string_view kind = text.substr(0, colon);
    const std::string_view args = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);

    SchemeConfig scheme;
    if (kind == "uniform" && args.empty()) {
        scheme = UniformScheme{};
    } else if (kind == "poly") {
        scheme = PolyDecayScheme{args.empty() ? 3.0 : parse_parameter(args, "gamma")};
    } else if (kind == "suffix") {
        scheme = SuffixScheme{args.empty() ? 0.5 : parse_parameter(args, "kappa")};
    } else if (kind == "online-suffix" && args.empty()) {
        scheme = OnlineSuffixScheme{};
    } else if (kind == "adaptive") {
        scheme = AdaptiveScheme{args.empty() ? schedule_alpha : parse_parameter(args, "alpha")};
    } else if (kind == "last" && args.empty()) {
        scheme = LastIterateScheme{};
    } else if (kind == "explicit" && args.size() > 1 && args.front() == '@') {
        const std::string path(args.substr(1));
        scheme = ExplicitScheme{read_weight_file(path), path};
    } else {
        throw ConfigError("unknown averaging scheme '" + std::string(text) + "'");
    }
    validate(scheme);
    return scheme;
}

std::string scheme_name(const SchemeConfig& scheme) {
    return std::visit(
        overloaded{
            [](const UniformScheme&) { return std::string("uniform"); },
            [](const PolyDecayScheme& s) { return "poly:gamma=" + format_number(s.gamma); },
            [](const SuffixScheme& s) { return "suffix:kappa=" + format_number(s.kappa); },
            [](const OnlineSuffixScheme&) { return std::string("online-suffix"); },
            [](const AdaptiveScheme& s) { return "adaptive:alpha=" + format_number(s.alpha); },
            [](const LastIterateScheme&) { return std::string("last"); },
            [](const ExplicitScheme& s) { return "explicit:@" + s.source; },
        },
        scheme);
}

void validate(const SchemeConfig& scheme) {
    std::visit(overloaded{
                   [](const PolyDecayScheme& s) {
                       if (!(s.gamma >= 1.0) || !std::isfinite(s.gamma)) {
                           throw ConfigError("poly averaging needs gamma >= 1");
                       }
                   },
                   [](const SuffixScheme& s) {
                       if (!(s.kappa > 0.0 && s.kappa < 1.0)) {
                           throw ConfigError("suffix averaging needs 0 < kappa < 1");
                       }
                   },
                   [](const AdaptiveScheme& s) {
                       if (!(s.alpha > 0.0 && s.alpha < 1.0)) {
                           throw ConfigError("adaptive averaging needs 0 < alpha < 1");
                       }
                   },
                   [](const ExplicitScheme& s) {
                       if (s.weights.empty()) throw ConfigError("explicit weight vector is empty");
                       for (double w : s.weights) {
                           if (!std::isfinite(w)) throw ConfigError("explicit weights must be finite");
                       }
                   },
                   [](const auto&) {},
               },
               scheme);
}

std::vector<double> read_weight_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open weight file '" + path + "'");
    std::vector<double> weights;
    std::string line;
    while (std::getline(in, line)) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto last = line.find_last_not_of(" \t\r");
        weights.push_back(parse_number(std::string_view(line).substr(first, last - first + 1), "weight"));
    }
    return weights;
}

std::size_t suffix_length(double kappa, std::size_t n) {
    const double product = kappa * static_cast<double>(n);
    const double nearest = std::round(product);
    double k = std::abs(product - nearest) <= 1e-9 * std::max(1.0, product) ? nearest : std::ceil(product);
    k = std::clamp(k, 1.0, static_cast<double>(n));
    return static_cast<std::size_t>(k);
}

std::size_t online_suffix_offset(std::size_t t) {
    if (t <= 2) return 0;
    // ceil(log2 t) = bit width of t - 1
    const auto m = static_cast<unsigned>(std::bit_width(t - 1));
    return std::size_t{1} << (m - 2);
}

// Neumaier summation; long suffix vectors drift by ~1e-12 otherwise.
double WeightVector::sum() const {
    double total = 0.0, carry = 0.0;
    for (double v : w) {
        const double t = total + v;
        carry += std::abs(total) >= std::abs(v) ? (total - t) + v : (v - t) + total;
        total = t;
    }
    return total + carry;
}

WeightVector materialize_weights(const SchemeConfig& scheme, std::size_t n) {
    if (n < 1) throw ConfigError("weights need a horizon n >= 1");
    validate(scheme);
    WeightVector out;
    out.w.assign(n, 0.0);
    auto& w = out.w;
    const double nd = static_cast<double>(n);

    std::visit(overloaded{
                   [&](const UniformScheme&) { std::fill(w.begin(), w.end(), 1.0 / nd); },
                   [&](const PolyDecayScheme& s) {
                       // theta_{n,i} = (gamma+1)/(gamma+i) * prod_{j=i+1}^n (j-1)/(j+gamma),
                       // built backwards from i = n as a running product.
                       double product = 1.0;
                       for (std::size_t i = n; i >= 1; --i) {
                           const double id = static_cast<double>(i);
                           w[i - 1] = (s.gamma + 1.0) / (s.gamma + id) * product;
                           product *= (id - 1.0) / (id + s.gamma);
                       }
                   },
                   [&](const SuffixScheme& s) {
                       const std::size_t k = suffix_length(s.kappa, n);
                       std::fill(w.end() - static_cast<std::ptrdiff_t>(k), w.end(), 1.0 / static_cast<double>(k));
                   },
                   [&](const OnlineSuffixScheme&) {
                       const std::size_t offset = online_suffix_offset(n);
                       const double value = 1.0 / static_cast<double>(n - offset);
                       std::fill(w.begin() + static_cast<std::ptrdiff_t>(offset), w.end(), value);
                   },
                   [&](const AdaptiveScheme& s) {
                       for (std::size_t i = 1; i <= n; ++i) w[i - 1] = adaptive_weight(i, n, s.alpha);
                   },
                   [&](const LastIterateScheme&) { w[n - 1] = 1.0; },
                   [&](const ExplicitScheme& s) {
                       if (s.weights.size() != n) {
                           throw ConfigError("explicit weights have length " + std::to_string(s.weights.size()) +
                                             ", requested horizon " + std::to_string(n));
                       }
                       w = s.weights;
                   },
               },
               scheme);
    return out;
}

double prefactor(const SchemeConfig& scheme) {
    validate(scheme);
    return std::visit(overloaded{
                          [](const UniformScheme&) { return 1.0; },
                          [](const PolyDecayScheme& s) {
                              return (s.gamma + 1.0) * (s.gamma + 1.0) / (2.0 * s.gamma + 1.0);
                          },
                          [](const SuffixScheme& s) { return 1.0 / s.kappa; },
                          [](const AdaptiveScheme&) { return 1.0; },
                          [&](const auto&) -> double {
                              throw Unsupported("no closed-form prefactor for scheme " + scheme_name(scheme));
                          },
                      },
                      scheme);
}

double prefactor_numeric(const SchemeConfig& scheme, std::size_t n) {
    const WeightVector weights = materialize_weights(scheme, n);
    std::size_t count = n;
    if (std::holds_alternative<AdaptiveScheme>(scheme) && n > 1) count = n - 1;
    double energy = 0.0;
    for (std::size_t i = 0; i < count; ++i) energy += weights.w[i] * weights.w[i];
    return static_cast<double>(n) * energy;
}

IterateBuffer::IterateBuffer(Eigen::Index dim, std::size_t capacity)
    : store_(dim, static_cast<Eigen::Index>(std::max<std::size_t>(capacity, 1))) {}

void IterateBuffer::push(const Vector& x) {
    store_.col(static_cast<Eigen::Index>(next_)) = x;
    next_ = (next_ + 1) % capacity();
    size_ = std::min(size_ + 1, capacity());
}

Vector IterateBuffer::sum_recent(std::size_t k) const {
    if (k > size_) {
        throw InsufficientBuffer("requested the last " + std::to_string(k) + " iterates, buffer holds " +
                                 std::to_string(size_));
    }
    Vector sum = Vector::Zero(store_.rows());
    std::size_t slot = next_;
    for (std::size_t j = 0; j < k; ++j) {
        slot = (slot + capacity() - 1) % capacity();
        sum += store_.col(static_cast<Eigen::Index>(slot));
    }
    return sum;
}

Vector finalize_suffix(const IterateBuffer& buffer, std::size_t n, double kappa) {
    if (!(kappa > 0.0 && kappa <= 1.0)) throw ConfigError("suffix fraction must lie in (0, 1]");
    const std::size_t k = suffix_length(kappa, n);
    return buffer.sum_recent(k) / static_cast<double>(k);
}

Averager::Averager(SchemeConfig scheme, Eigen::Index dim, std::size_t horizon)
    : scheme_(std::move(scheme)), dim_(dim), estimate_(Vector::Zero(dim)) {
    validate(scheme_);
    if (dim < 1) throw ConfigError("averager dimension must be at least 1");
    if (const auto* suffix = std::get_if<SuffixScheme>(&scheme_)) {
        if (horizon == 0) throw ConfigError("suffix averaging needs the horizon n in advance");
        buffer_.emplace(dim, suffix_length(suffix->kappa, horizon));
    }
    if (std::holds_alternative<OnlineSuffixScheme>(scheme_)) {
        block_prev_ = Vector::Zero(dim);
        block_cur_ = Vector::Zero(dim);
    }
}

void Averager::update(std::size_t i, const Vector& x) {
    if (i != t_ + 1) {
        throw OutOfOrder("averager expected iterate " + std::to_string(t_ + 1) + ", got " + std::to_string(i));
    }
    if (x.size() != dim_) throw ConfigError("iterate has the wrong dimension");
    const double id = static_cast<double>(i);

    std::visit(overloaded{
                   [&](const UniformScheme&) { estimate_ += (x - estimate_) / id; },
                   [&](const PolyDecayScheme& s) {
                       const double r = (s.gamma + 1.0) / (s.gamma + id);
                       estimate_ = (1.0 - r) * estimate_ + r * x;
                   },
                   [&](const SuffixScheme&) { buffer_->push(x); },
                   [&](const OnlineSuffixScheme&) {
                       if (block_ < 63 && i > (std::size_t{1} << block_)) {
                           ++block_;
                           block_prev_ = block_cur_;
                           block_cur_ = x;
                       } else {
                           block_cur_ += x;
                       }
                   },
                   [&](const AdaptiveScheme& s) {
                       if (i == 1) {
                           estimate_ = x;
                       } else {
                           const double m = id - 1.0;
                           const double grown = std::pow(id, s.alpha);
                           estimate_ = (m / id) * estimate_ + ((1.0 - grown) / id) * previous_ + (grown / id) * x;
                       }
                       previous_ = x;
                   },
                   [&](const LastIterateScheme&) { estimate_ = x; },
                   [&](const ExplicitScheme& s) {
                       if (i > s.weights.size()) {
                           throw InsufficientBuffer("explicit weights cover only " + std::to_string(s.weights.size()) +
                                                    " iterates");
                       }
                       estimate_ += s.weights[i - 1] * x;
                   },
               },
               scheme_);
    t_ = i;
}

Vector Averager::estimate() const {
    if (t_ == 0) throw ConfigError("averager has not seen any iterate");
    if (const auto* suffix = std::get_if<SuffixScheme>(&scheme_)) {
        return finalize_suffix(*buffer_, t_, suffix->kappa);
    }
    if (std::holds_alternative<OnlineSuffixScheme>(scheme_)) {
        const std::size_t offset = block_ >= 2 ? std::size_t{1} << (block_ - 2) : 0;
        return (block_prev_ + block_cur_) / static_cast<double>(t_ - offset);
    }
    return estimate_;
}

}  // namespace wasgd
