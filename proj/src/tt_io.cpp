#include "ttiga/tt_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ttiga {

namespace {

constexpr char kMagic[4] = {'T', 'T', 'K', '1'};
constexpr std::uint64_t kMaxDim = std::uint64_t{1} << 40;

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
T byteswap_if_big(T v)
{
    if constexpr (std::endian::native == std::endian::big) {
        unsigned char b[sizeof(T)];
        std::memcpy(b, &v, sizeof(T));
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
        std::memcpy(&v, b, sizeof(T));
    }
    return v;
}

void put_u64(std::ostream& os, std::uint64_t v)
{
    v = byteswap_if_big(v);
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_f64(std::ostream& os, const Vector& v)
{
    for (Index i = 0; i < v.size(); ++i) {
        double x = byteswap_if_big(v[i]);
        os.write(reinterpret_cast<const char*>(&x), sizeof x);
    }
}

std::uint64_t get_u64(std::istream& is)
{
    std::uint64_t v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw std::runtime_error("TTK1: truncated header");
    return byteswap_if_big(v);
}

Vector get_f64(std::istream& is, Index n)
{
    Vector v(n);
    for (Index i = 0; i < n; ++i) {
        double x = 0;
        if (!is.read(reinterpret_cast<char*>(&x), sizeof x)) throw std::runtime_error("TTK1: truncated core data");
        v[i] = byteswap_if_big(x);
    }
    return v;
}

Index checked_dim(std::uint64_t v, const char* what)
{
    if (v == 0 || v > kMaxDim) throw std::runtime_error(std::string("TTK1: invalid ") + what);
    return static_cast<Index>(v);
}

}  // namespace

void write_tt(std::ostream& os, const TTTensor& t)
{
    os.write(kMagic, 4);
    put_u64(os, 0);
    put_u64(os, static_cast<std::uint64_t>(t.order()));
    for (Index n : t.shape()) put_u64(os, static_cast<std::uint64_t>(n));
    for (Index r : t.ranks()) put_u64(os, static_cast<std::uint64_t>(r));
    for (const auto& c : t.cores()) put_f64(os, c.values());
    if (!os) throw std::runtime_error("TTK1: write failed");
}

void write_tt(std::ostream& os, const TTMatrix& a)
{
    os.write(kMagic, 4);
    put_u64(os, 1);
    put_u64(os, static_cast<std::uint64_t>(a.order()));
    for (Index n : a.row_shape()) put_u64(os, static_cast<std::uint64_t>(n));
    for (Index n : a.col_shape()) put_u64(os, static_cast<std::uint64_t>(n));
    for (Index r : a.ranks()) put_u64(os, static_cast<std::uint64_t>(r));
    for (const auto& c : a.cores()) put_f64(os, c.values());
    if (!os) throw std::runtime_error("TTK1: write failed");
}

void save_tt(const std::filesystem::path& path, const TTTensor& t)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_tt(os, t);
}

void save_tt(const std::filesystem::path& path, const TTMatrix& a)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_tt(os, a);
}

TTObject read_tt(std::istream& is)
{
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error("TTK1: bad magic");
    const std::uint64_t kind = get_u64(is);
    if (kind > 1) throw std::runtime_error("TTK1: unknown kind " + std::to_string(kind));
    const Index d = checked_dim(get_u64(is), "order");
    if (d > 4096) throw std::runtime_error("TTK1: implausible order");
    std::vector<Index> rows(static_cast<std::size_t>(d)), cols(static_cast<std::size_t>(d));
    for (auto& n : rows) n = checked_dim(get_u64(is), "mode size");
    if (kind == 1)
        for (auto& n : cols) n = checked_dim(get_u64(is), "mode size");
    std::vector<Index> ranks(static_cast<std::size_t>(d + 1));
    for (auto& r : ranks) r = checked_dim(get_u64(is), "rank");
    if (ranks.front() != 1 || ranks.back() != 1) throw std::runtime_error("TTK1: boundary ranks must be 1");
    if (kind == 0) {
        std::vector<Core3> cores;
        for (Index k = 0; k < d; ++k) {
            const auto r0 = ranks[static_cast<std::size_t>(k)], r1 = ranks[static_cast<std::size_t>(k + 1)];
            const auto n = rows[static_cast<std::size_t>(k)];
            cores.emplace_back(r0, n, r1, get_f64(is, r0 * n * r1));
        }
        return TTTensor(std::move(cores));
    }
    std::vector<Core4> cores;
    for (Index k = 0; k < d; ++k) {
        const auto r0 = ranks[static_cast<std::size_t>(k)], r1 = ranks[static_cast<std::size_t>(k + 1)];
        const auto m = rows[static_cast<std::size_t>(k)], n = cols[static_cast<std::size_t>(k)];
        Core4 c(r0, m, n, r1);
        c.values() = get_f64(is, r0 * m * n * r1);
        cores.push_back(std::move(c));
    }
    return TTMatrix(std::move(cores));
}

TTObject load_tt(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    return read_tt(is);
}

namespace {

std::string join(const std::vector<Index>& v)
{
    std::string s;
    for (std::size_t k = 0; k < v.size(); ++k) s += (k ? " " : "") + std::to_string(v[k]);
    return s;
}

}  // namespace

std::string describe(const TTObject& obj)
{
    std::ostringstream os;
    if (const auto* t = std::get_if<TTTensor>(&obj)) {
        os << "kind: tensor\n"
           << "order: " << t->order() << "\n"
           << "shape: " << join(t->shape()) << "\n"
           << "ranks: " << join(t->ranks()) << "\n"
           << "mean rank: " << t->mean_rank() << "\n"
           << "storage (entries): " << t->storage() << "\n";
    } else {
        const auto& a = std::get<TTMatrix>(obj);
        os << "kind: matrix\n"
           << "order: " << a.order() << "\n"
           << "row shape: " << join(a.row_shape()) << "\n"
           << "column shape: " << join(a.col_shape()) << "\n"
           << "ranks: " << join(a.ranks()) << "\n"
           << "mean rank: " << a.mean_rank() << "\n"
           << "storage (entries): " << a.storage() << "\n";
    }
    return os.str();
}

}  // namespace ttiga
