// SPDX-License-Identifier: Apache-2.0

#include "nlml/io.hpp"

#include <bit>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "nlml/dense_net.hpp"
#include "nlml/errors.hpp"

namespace nlml {

namespace {

constexpr char kMagic[4] = {'N', 'L', 'M', 'L'};
constexpr std::uint32_t kKindTensor = 1;
constexpr std::uint32_t kKindFactorSet = 2;

void write_bytes(std::ostream& os, const void* p, std::size_t n) {
    os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    if (!os) throw DataError("write failed");
}

void read_bytes(std::istream& is, void* p, std::size_t n) {
    is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is.gcount()) != n) throw DataError("unexpected end of file");
}

void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    write_bytes(os, b, 4);
}

std::uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    read_bytes(is, b, 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

void write_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    write_bytes(os, b, 8);
}

std::uint64_t read_u64(std::istream& is) {
    unsigned char b[8];
    read_bytes(is, b, 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

void write_f64(std::ostream& os, double d) { write_u64(os, std::bit_cast<std::uint64_t>(d)); }

double read_f64(std::istream& is) { return std::bit_cast<double>(read_u64(is)); }

void write_f64_array(std::ostream& os, const double* p, std::size_t n) {
    if constexpr (std::endian::native == std::endian::little) {
        write_bytes(os, p, n * sizeof(double));
    } else {
        for (std::size_t i = 0; i < n; ++i) write_f64(os, p[i]);
    }
}

void read_f64_array(std::istream& is, double* p, std::size_t n) {
    if constexpr (std::endian::native == std::endian::little) {
        read_bytes(is, p, n * sizeof(double));
    } else {
        for (std::size_t i = 0; i < n; ++i) p[i] = read_f64(is);
    }
}

void write_header(std::ostream& os, std::uint32_t kind) {
    write_bytes(os, kMagic, 4);
    write_u32(os, kFormatVersion);
    write_u32(os, kind);
}

std::uint32_t read_header(std::istream& is) {
    char magic[4];
    read_bytes(is, magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) throw DataError("bad magic (not an NLML container)");
    const std::uint32_t version = read_u32(is);
    if (version != kFormatVersion)
        throw DataError("unsupported container version " + std::to_string(version));
    return read_u32(is);
}

void write_tensor_payload(std::ostream& os, const Tensor& t) {
    write_u32(os, static_cast<std::uint32_t>(t.order()));
    for (std::size_t d : t.dims()) write_u64(os, d);
    write_f64_array(os, t.data(), t.size());
}

Tensor read_tensor_payload(std::istream& is) {
    const std::uint32_t order = read_u32(is);
    if (order < 1 || order > 8) throw DataError("tensor order out of range");
    std::vector<std::size_t> dims(order);
    std::size_t total = 1;
    for (auto& d : dims) {
        d = static_cast<std::size_t>(read_u64(is));
        if (d == 0 || total > (1ull << 40) / d) throw DataError("tensor dims overflow");
        total *= d;
    }
    std::vector<double> data(total);
    read_f64_array(is, data.data(), total);
    return Tensor(std::move(dims), std::move(data));
}

void write_matrix_payload(std::ostream& os, const Matrix& m) {
    write_u64(os, m.rows());
    write_u64(os, m.cols());
    write_f64_array(os, m.data(), m.size());
}

Matrix read_matrix_payload(std::istream& is) {
    const auto rows = static_cast<std::size_t>(read_u64(is));
    const auto cols = static_cast<std::size_t>(read_u64(is));
    if (rows == 0 || cols == 0 || rows > (1ull << 32) || cols > (1ull << 32))
        throw DataError("matrix dims out of range");
    std::vector<double> data(rows * cols);
    read_f64_array(is, data.data(), data.size());
    return Matrix(rows, cols, std::move(data));
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode) {
    std::ofstream os(path, mode);
    if (!os) throw DataError("cannot open for writing: " + path.string());
    return os;
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode) {
    std::ifstream is(path, mode);
    if (!is) throw DataError("cannot open for reading: " + path.string());
    return is;
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void save_tensor(const std::filesystem::path& path, const Tensor& t) {
    auto os = open_out(path, std::ios::binary);
    write_header(os, kKindTensor);
    write_tensor_payload(os, t);
}

Tensor load_tensor(const std::filesystem::path& path) {
    auto is = open_in(path, std::ios::binary);
    if (read_header(is) != kKindTensor) throw DataError("container does not hold a tensor");
    return read_tensor_payload(is);
}

void save_factorset(const std::filesystem::path& path, const FactorSet& f) {
    auto os = open_out(path, std::ios::binary);
    write_header(os, kKindFactorSet);
    write_tensor_payload(os, f.core);
    for (const auto& factor : f.factors) write_matrix_payload(os, factor);
    for (const auto& s : f.spectra) {
        write_u32(os, static_cast<std::uint32_t>(s.mode));
        write_u64(os, s.singular_values.size());
        write_f64_array(os, s.singular_values.data(), s.singular_values.size());
    }
    write_tensor_payload(os, f.w);
}

FactorSet load_factorset(const std::filesystem::path& path) {
    auto is = open_in(path, std::ios::binary);
    if (read_header(is) != kKindFactorSet) throw DataError("container does not hold a factor set");
    FactorSet f;
    f.core = read_tensor_payload(is);
    for (auto& factor : f.factors) factor = read_matrix_payload(is);
    for (auto& s : f.spectra) {
        s.mode = read_u32(is);
        const auto n = static_cast<std::size_t>(read_u64(is));
        if (n > (1ull << 32)) throw DataError("spectrum length out of range");
        s.singular_values.resize(n);
        read_f64_array(is, s.singular_values.data(), n);
    }
    f.w = read_tensor_payload(is);
    return f;
}

void save_tensor_text(std::ostream& os, const Tensor& t) {
    os << "#nlml-tensor v" << kFormatVersion << "\n";
    os << "dims";
    for (std::size_t d : t.dims()) os << " " << d;
    os << "\n";
    for (std::size_t i = 0; i < t.size(); ++i) {
        os << format_double(t.data()[i]);
        os << ((i % 8 == 7 || i + 1 == t.size()) ? "\n" : " ");
    }
}

Tensor load_tensor_text(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("#nlml-tensor", 0) != 0)
        throw DataError("not a tensor text export");
    std::string word;
    is >> word;
    if (word != "dims") throw DataError("tensor text: missing dims");
    std::vector<std::size_t> dims;
    {
        std::getline(is, line);
        std::istringstream ls(line);
        std::size_t d;
        while (ls >> d) dims.push_back(d);
    }
    if (dims.empty()) throw DataError("tensor text: empty dims");
    std::size_t total = 1;
    for (std::size_t d : dims) total *= d;
    std::vector<double> data(total);
    for (auto& v : data)
        if (!(is >> v)) throw DataError("tensor text: truncated data");
    return Tensor(std::move(dims), std::move(data));
}

void save_factorset_text(std::ostream& os, const FactorSet& f) {
    os << "#nlml-factorset v" << kFormatVersion << "\n";
    os << "core\n";
    save_tensor_text(os, f.core);
    for (std::size_t m = 0; m < 5; ++m) {
        const Matrix& a = f.factors[m];
        os << "factor " << (m + 1) << " " << a.rows() << " " << a.cols() << "\n";
        for (std::size_t r = 0; r < a.rows(); ++r) {
            for (std::size_t c = 0; c < a.cols(); ++c)
                os << (c ? " " : "") << format_double(a(r, c));
            os << "\n";
        }
    }
    for (const auto& s : f.spectra) {
        os << "spectrum " << s.mode << " " << s.singular_values.size() << "\n";
        for (std::size_t i = 0; i < s.singular_values.size(); ++i)
            os << (i ? " " : "") << format_double(s.singular_values[i]);
        os << "\n";
    }
    os << "w\n";
    save_tensor_text(os, f.w);
}

FactorSet load_factorset_text(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("#nlml-factorset", 0) != 0)
        throw DataError("not a factor-set text export");
    FactorSet f;
    if (!std::getline(is, line) || line != "core") throw DataError("factorset text: missing core");
    f.core = load_tensor_text(is);
    for (std::size_t m = 0; m < 5; ++m) {
        std::string word;
        std::size_t mode, rows, cols;
        if (!(is >> word >> mode >> rows >> cols) || word != "factor" || mode != m + 1)
            throw DataError("factorset text: malformed factor header");
        Matrix a(rows, cols);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c)
                if (!(is >> a(r, c))) throw DataError("factorset text: truncated factor");
        f.factors[m] = std::move(a);
    }
    for (auto& s : f.spectra) {
        std::string word;
        std::size_t mode, n;
        if (!(is >> word >> mode >> n) || word != "spectrum")
            throw DataError("factorset text: malformed spectrum header");
        s.mode = mode;
        s.singular_values.resize(n);
        for (auto& v : s.singular_values)
            if (!(is >> v)) throw DataError("factorset text: truncated spectrum");
    }
    {
        std::string word;
        if (!(is >> word) || word != "w") throw DataError("factorset text: missing w");
        is.ignore();  // rest of line
        f.w = load_tensor_text(is);
    }
    return f;
}

namespace {

std::string grid_spec(const std::vector<double>& bins) {
    // uniform bins serialize as lo:hi:step
    const double lo = bins.front();
    const double hi = bins.back();
    const double step = bins.size() > 1 ? bins[1] - bins[0] : 1.0;
    return format_double(lo) + ":" + format_double(hi) + ":" + format_double(step);
}

std::vector<double> parse_grid_spec(const std::string& spec, const char* axis) {
    double lo, hi, step;
    char c1, c2;
    std::istringstream ss(spec);
    if (!(ss >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':' || !(step > 0.0))
        throw DataError(std::string("dataset header: bad grid spec for ") + axis);
    const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 0.5)) + 1;
    std::vector<double> bins(count);
    for (std::size_t i = 0; i < count; ++i) bins[i] = lo + static_cast<double>(i) * step;
    return bins;
}

}  // namespace

void save_dataset(const std::filesystem::path& path, const PoseDataset& d, const PoseGrid& grid,
                  std::uint64_t seed) {
    auto os = open_out(path, std::ios::out);
    os << "#nlml-dataset v" << kFormatVersion << " n_landmarks=" << d.n_landmarks
       << " seed=" << seed << " yaw=" << grid_spec(grid.yaw_bins)
       << " pitch=" << grid_spec(grid.pitch_bins) << " roll=" << grid_spec(grid.roll_bins)
       << "\n";
    for (const auto& s : d.samples) {
        os << s.identity << " " << format_double(s.pose.yaw) << " " << format_double(s.pose.pitch)
           << " " << format_double(s.pose.roll);
        for (double f : s.features) os << " " << format_double(f);
        os << "\n";
    }
    if (!os) throw DataError("write failed: " + path.string());
}

DatasetFile load_dataset(const std::filesystem::path& path) {
    auto is = open_in(path, std::ios::in);
    std::string header;
    if (!std::getline(is, header) || header.rfind("#nlml-dataset", 0) != 0)
        throw DataError("not a dataset file: " + path.string());

    DatasetFile out;
    std::map<std::string, std::string> fields;
    {
        std::istringstream hs(header);
        std::string tok;
        hs >> tok;  // #nlml-dataset
        hs >> tok;  // v1
        if (tok != "v" + std::to_string(kFormatVersion))
            throw DataError("unsupported dataset version: " + tok);
        while (hs >> tok) {
            const auto eq = tok.find('=');
            if (eq == std::string::npos) throw DataError("dataset header: bad field " + tok);
            fields[tok.substr(0, eq)] = tok.substr(eq + 1);
        }
    }
    for (const char* key : {"n_landmarks", "seed", "yaw", "pitch", "roll"})
        if (!fields.count(key))
            throw DataError(std::string("dataset header: missing field ") + key);

    out.dataset.n_landmarks = std::stoul(fields["n_landmarks"]);
    out.seed = std::stoull(fields["seed"]);
    out.grid.yaw_bins = parse_grid_spec(fields["yaw"], "yaw");
    out.grid.pitch_bins = parse_grid_spec(fields["pitch"], "pitch");
    out.grid.roll_bins = parse_grid_spec(fields["roll"], "roll");

    const std::size_t df = 3 * out.dataset.n_landmarks;
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        PoseSample s;
        if (!(ls >> s.identity >> s.pose.yaw >> s.pose.pitch >> s.pose.roll))
            throw DataError("dataset line " + std::to_string(line_no) + ": malformed record");
        s.features.resize(df);
        for (auto& f : s.features)
            if (!(ls >> f))
                throw DataError("dataset line " + std::to_string(line_no) +
                                ": expected " + std::to_string(df) + " features");
        double extra;
        if (ls >> extra)
            throw DataError("dataset line " + std::to_string(line_no) + ": trailing values");
        out.dataset.samples.push_back(std::move(s));
    }
    if (out.dataset.samples.empty()) throw DataError("dataset has no records");
    return out;
}

void save_params(const std::filesystem::path& path, const SinusoidalParams& p) {
    auto os = open_out(path, std::ios::out);
    os << "#nlml-params v" << kFormatVersion << "\n";
    for (Axis axis : {Axis::Yaw, Axis::Pitch, Axis::Roll}) {
        const AxisCurves& c = p.axis(axis);
        os << "axis " << axis_name(axis) << " dims " << c.dims.size() << " grid";
        for (double a : c.grid_angles) os << " " << format_double(a);
        os << "\n";
        for (std::size_t j = 0; j < c.dims.size(); ++j) {
            const CosineFit& fit = c.dims[j];
            os << "curve " << axis_name(axis) << " " << j << " "
               << format_double(fit.params.amplitude) << " " << format_double(fit.params.frequency)
               << " " << format_double(fit.params.phase) << " " << format_double(fit.params.offset)
               << " " << format_double(fit.residual_rms) << " " << (fit.params.degenerate ? 1 : 0)
               << " " << (fit.converged ? 1 : 0) << "\n";
        }
    }
    if (!os) throw DataError("write failed: " + path.string());
}

SinusoidalParams load_params(const std::filesystem::path& path) {
    auto is = open_in(path, std::ios::in);
    std::string line;
    if (!std::getline(is, line) || line.rfind("#nlml-params", 0) != 0)
        throw DataError("not a params file: " + path.string());

    SinusoidalParams out;
    out.yaw.axis = Axis::Yaw;
    out.pitch.axis = Axis::Pitch;
    out.roll.axis = Axis::Roll;

    auto axis_by_name = [&](const std::string& n) -> AxisCurves& {
        if (n == "yaw") return out.yaw;
        if (n == "pitch") return out.pitch;
        if (n == "roll") return out.roll;
        throw DataError("params file: unknown axis " + n);
    };

    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string kind;
        ls >> kind;
        if (kind == "axis") {
            std::string name, dims_word, grid_word;
            std::size_t dims;
            if (!(ls >> name >> dims_word >> dims >> grid_word) || dims_word != "dims" ||
                grid_word != "grid")
                throw DataError("params file: malformed axis line");
            AxisCurves& c = axis_by_name(name);
            c.dims.reserve(dims);
            double a;
            while (ls >> a) c.grid_angles.push_back(a);
        } else if (kind == "curve") {
            std::string name;
            std::size_t j;
            CosineFit fit;
            int degenerate = 0, converged = 0;
            if (!(ls >> name >> j >> fit.params.amplitude >> fit.params.frequency >>
                  fit.params.phase >> fit.params.offset >> fit.residual_rms >> degenerate >>
                  converged))
                throw DataError("params file: malformed curve line");
            fit.params.degenerate = degenerate != 0;
            fit.converged = converged != 0;
            AxisCurves& c = axis_by_name(name);
            if (j != c.dims.size()) throw DataError("params file: curves out of order");
            c.dims.push_back(std::move(fit));
        } else {
            throw DataError("params file: unknown line kind " + kind);
        }
    }
    return out;
}

namespace {

void save_net(std::ostream& os, const DenseNet& net) {
    os << "net " << role_name(net.role) << " layers " << net.layers.size() << " seed "
       << net.init_seed << "\n";
    for (const auto& l : net.layers) {
        os << "layer " << l.in << " " << l.out << " " << activation_name(l.activation) << "\n";
        os << "w";
        for (double w : l.weights) os << " " << format_double(w);
        os << "\nb";
        for (double b : l.bias) os << " " << format_double(b);
        os << "\n";
    }
}

DenseNet load_net(std::istream& is) {
    std::string word, role;
    std::size_t n_layers;
    std::uint64_t seed;
    std::string layers_word, seed_word;
    if (!(is >> word >> role >> layers_word >> n_layers >> seed_word >> seed) || word != "net" ||
        layers_word != "layers" || seed_word != "seed")
        throw DataError("model file: malformed net header");
    DenseNet net;
    net.role = role_from_name(role);
    net.init_seed = seed;
    for (std::size_t li = 0; li < n_layers; ++li) {
        std::string act;
        Layer l;
        if (!(is >> word >> l.in >> l.out >> act) || word != "layer")
            throw DataError("model file: malformed layer header");
        l.activation = activation_from_name(act);
        l.weights.resize(l.in * l.out);
        l.bias.resize(l.out);
        if (!(is >> word) || word != "w") throw DataError("model file: missing weights");
        for (auto& v : l.weights)
            if (!(is >> v)) throw DataError("model file: truncated weights");
        if (!(is >> word) || word != "b") throw DataError("model file: missing biases");
        for (auto& v : l.bias)
            if (!(is >> v)) throw DataError("model file: truncated biases");
        net.layers.push_back(std::move(l));
    }
    return net;
}

}  // namespace

void save_bundle(const std::filesystem::path& path, const ModelBundle& b) {
    auto os = open_out(path, std::ios::out);
    os << "#nlml-bundle v" << kFormatVersion << "\n";
    os << "ranges";
    for (const auto& [lo, hi] : b.ranges) os << " " << format_double(lo) << " " << format_double(hi);
    os << "\n";
    save_net(os, b.encoder);
    save_net(os, b.head_yaw);
    save_net(os, b.head_pitch);
    save_net(os, b.head_roll);
    if (!os) throw DataError("write failed: " + path.string());
}

ModelBundle load_bundle(const std::filesystem::path& path) {
    auto is = open_in(path, std::ios::in);
    std::string line;
    if (!std::getline(is, line) || line.rfind("#nlml-bundle", 0) != 0)
        throw DataError("not a model bundle: " + path.string());
    ModelBundle b;
    std::string word;
    if (!(is >> word) || word != "ranges") throw DataError("model bundle: missing ranges");
    for (auto& [lo, hi] : b.ranges)
        if (!(is >> lo >> hi)) throw DataError("model bundle: malformed ranges");
    b.encoder = load_net(is);
    b.head_yaw = load_net(is);
    b.head_pitch = load_net(is);
    b.head_roll = load_net(is);
    if (b.encoder.role != NetRole::Encoder || b.head_yaw.role != NetRole::HeadYaw ||
        b.head_pitch.role != NetRole::HeadPitch || b.head_roll.role != NetRole::HeadRoll)
        throw DataError("model bundle: nets out of order");
    return b;
}

}  // namespace nlml
