#include "ssl/field_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace ssl {

static_assert(std::endian::native == std::endian::little, "field files are written in host order");

namespace {

template <class T>
void put(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw std::runtime_error("read_field: truncated file");
    return v;
}

}  // namespace

void write_field(const std::filesystem::path& path, const SectorField& f) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_field: cannot open " + path.string());
    out.write("SSL1", 4);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(f.grid->n));
    put<double>(out, f.grid->r_max);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(f.grid->l));
    for (int j = 0; j < f.size(); ++j) {
        put<double>(out, f.values[j].real());
        put<double>(out, f.values[j].imag());
    }
}

SectorField read_field(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_field: cannot open " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "SSL1", 4) != 0) throw std::runtime_error("read_field: bad magic");
    const auto n = get<std::uint32_t>(in);
    const auto r_max = get<double>(in);
    const auto l = get<std::uint32_t>(in);
    auto grid = make_grid(r_max, static_cast<int>(n), static_cast<int>(l));
    CVec v(n);
    for (std::uint32_t j = 0; j < n; ++j) {
        const double re = get<double>(in);
        const double im = get<double>(in);
        v[j] = {re, im};
    }
    return SectorField(grid, v);
}

nlohmann::json field_to_json(const SectorField& f) {
    nlohmann::json j;
    j["n"] = f.grid->n;
    j["r_max"] = f.grid->r_max;
    j["l"] = f.grid->l;
    std::vector<double> re(f.size()), im(f.size());
    for (int k = 0; k < f.size(); ++k) {
        re[k] = f.values[k].real();
        im[k] = f.values[k].imag();
    }
    j["re"] = re;
    j["im"] = im;
    return j;
}

SectorField field_from_json(const nlohmann::json& j) {
    auto grid = make_grid(j.at("r_max").get<double>(), j.at("n").get<int>(), j.at("l").get<int>());
    auto re = j.at("re").get<std::vector<double>>();
    auto im = j.at("im").get<std::vector<double>>();
    if (re.size() != static_cast<size_t>(grid->n) || im.size() != re.size())
        throw ParameterError("field_from_json: length does not match n");
    CVec v(grid->n);
    for (int k = 0; k < grid->n; ++k) v[k] = {re[k], im[k]};
    return SectorField(grid, v);
}

}  // namespace ssl
