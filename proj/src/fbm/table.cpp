#include "mvfbm/fbm/table.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "mvfbm/errors.hpp"
#include "mvfbm/fbm/kernel.hpp"

namespace mvfbm::fbm {

namespace {

constexpr char kMagic[5] = {'F', 'B', 'M', 'K', '1'};

void write_doubles(std::ofstream& out, const double* p, std::size_t count) {
    out.write(reinterpret_cast<const char*>(p),
              static_cast<std::streamsize>(count * sizeof(double)));
}

void read_exact(std::ifstream& in, void* p, std::size_t bytes) {
    in.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(bytes));
    if (static_cast<std::size_t>(in.gcount()) != bytes) {
        throw ConfigError("kernel table: truncated file");
    }
}

}  // namespace

KernelTable KernelTable::build(HurstIndex h, double t_end, std::size_t n_steps) {
    if (!(t_end > 0.0) || n_steps == 0) {
        throw ConfigError("kernel table: need t_end > 0 and n_steps > 0");
    }
    KernelTable table;
    table.h_ = h.value();
    table.t_end_ = t_end;
    table.n_ = n_steps;
    table.data_.assign((n_steps + 1) * (n_steps + 2) / 2, 0.0);
    const double dt = t_end / static_cast<double>(n_steps);
    for (std::size_t i = 1; i <= n_steps; ++i) {
        const double t = static_cast<double>(i) * dt;
        for (std::size_t j = 1; j < i; ++j) {
            const double s = static_cast<double>(j) * dt;
            table.data_[table.offset(i, j)] = kernel_K(h, t, s);
        }
    }
    return table;
}

double KernelTable::at(std::size_t i, std::size_t j) const {
    if (i > n_ || j > i) {
        throw ConfigError("kernel table: index out of range");
    }
    return data_[offset(i, j)];
}

double KernelTable::row_identity_error(std::size_t i) const {
    if (i == 0 || i > n_) {
        throw ConfigError("kernel table: row index out of range");
    }
    const double dt = t_end_ / static_cast<double>(n_);
    double acc = 0.0;
    for (std::size_t j = 1; j < i; ++j) {
        const double k = data_[offset(i, j)];
        acc += k * k * dt;
    }
    const double exact = std::pow(static_cast<double>(i) * dt, 2.0 * h_);
    return std::fabs(acc - exact) / exact;
}

void KernelTable::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw ConfigError("kernel table: cannot open file for writing: " + path);
    }
    out.write(kMagic, sizeof(kMagic));
    write_doubles(out, &h_, 1);
    write_doubles(out, &t_end_, 1);
    const std::uint64_t n64 = n_;
    out.write(reinterpret_cast<const char*>(&n64), sizeof(n64));
    write_doubles(out, data_.data(), data_.size());
    if (!out) {
        throw ConfigError("kernel table: write failed: " + path);
    }
}

KernelTable KernelTable::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("kernel table: cannot open file: " + path);
    }
    char magic[sizeof(kMagic)];
    read_exact(in, magic, sizeof(magic));
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw ConfigError("kernel table: bad magic in " + path);
    }
    KernelTable table;
    read_exact(in, &table.h_, sizeof(double));
    read_exact(in, &table.t_end_, sizeof(double));
    std::uint64_t n64 = 0;
    read_exact(in, &n64, sizeof(n64));
    if (!(table.h_ > 0.0) || table.h_ >= 1.0 || !(table.t_end_ > 0.0) ||
        n64 == 0 || n64 > (1u << 20)) {
        throw ConfigError("kernel table: corrupt header in " + path);
    }
    table.n_ = static_cast<std::size_t>(n64);
    table.data_.assign((table.n_ + 1) * (table.n_ + 2) / 2, 0.0);
    read_exact(in, table.data_.data(), table.data_.size() * sizeof(double));
    return table;
}

}  // namespace mvfbm::fbm
