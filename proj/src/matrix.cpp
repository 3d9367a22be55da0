#include "neurodavis/matrix.hpp"

#include "neurodavis/error.hpp"

#include <cmath>
#include <string>

namespace neurodavis {

namespace {

std::string shape(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw InvalidInput("matrix data length " + std::to_string(data_.size()) + " does not match shape " +
                           std::to_string(rows) + "x" + std::to_string(cols));
    }
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t nr = rows.size();
    const std::size_t nc = nr == 0 ? 0 : rows.begin()->size();
    std::vector<double> data;
    data.reserve(nr * nc);
    for (const auto& r : rows) {
        if (r.size() != nc) {
            throw InvalidInput("ragged rows in matrix literal");
        }
        data.insert(data.end(), r.begin(), r.end());
    }
    return Matrix(nr, nc, std::move(data));
}

Matrix Matrix::identity(std::size_t n) {
    Matrix out(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        out(i, i) = 1.0;
    }
    return out;
}

Matrix Matrix::transpose() const {
    Matrix out(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r) {
        for (std::size_t c = 0; c < cols_; ++c) {
            out(c, r) = (*this)(r, c);
        }
    }
    return out;
}

bool Matrix::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw InvalidInput("matmul shape mismatch: " + shape(a) + " * " + shape(b));
    }
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto dst = out.row(i);
        for (std::size_t p = 0; p < a.cols(); ++p) {
            const double aip = a(i, p);
            if (aip == 0.0) {
                continue;
            }
            auto src = b.row(p);
            for (std::size_t j = 0; j < dst.size(); ++j) {
                dst[j] += aip * src[j];
            }
        }
    }
    return out;
}

Matrix matmul_transposed(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) {
        throw InvalidInput("matmul_transposed shape mismatch: " + shape(a) + " * " + shape(b) + "^T");
    }
    Matrix out(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < b.rows(); ++j) {
            out(i, j) = dot(a.row(i), b.row(j));
        }
    }
    return out;
}

Matrix transposed_matmul(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) {
        throw InvalidInput("transposed_matmul shape mismatch: " + shape(a) + "^T * " + shape(b));
    }
    Matrix out(a.cols(), b.cols());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        auto arow = a.row(r);
        auto brow = b.row(r);
        for (std::size_t i = 0; i < arow.size(); ++i) {
            const double ai = arow[i];
            if (ai == 0.0) {
                continue;
            }
            auto dst = out.row(i);
            for (std::size_t j = 0; j < brow.size(); ++j) {
                dst[j] += ai * brow[j];
            }
        }
    }
    return out;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw InvalidInput("matrix add shape mismatch: " + shape(a) + " + " + shape(b));
    }
    Matrix out = a;
    auto dst = out.values();
    auto src = b.values();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        dst[i] += src[i];
    }
    return out;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw InvalidInput("matrix subtract shape mismatch: " + shape(a) + " - " + shape(b));
    }
    Matrix out = a;
    auto dst = out.values();
    auto src = b.values();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        dst[i] -= src[i];
    }
    return out;
}

Matrix operator*(double s, const Matrix& a) {
    Matrix out = a;
    for (double& v : out.values()) {
        v *= s;
    }
    return out;
}

double frobenius_norm(const Matrix& a) {
    double sum = 0.0;
    for (double v : a.values()) {
        sum += v * v;
    }
    return std::sqrt(sum);
}

double dot(std::span<const double> a, std::span<const double> b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sum += a[i] * b[i];
    }
    return sum;
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        sum += diff * diff;
    }
    return std::sqrt(sum);
}

std::vector<double> column_means(const Matrix& a) {
    std::vector<double> means(a.cols(), 0.0);
    for (std::size_t r = 0; r < a.rows(); ++r) {
        auto row = a.row(r);
        for (std::size_t c = 0; c < means.size(); ++c) {
            means[c] += row[c];
        }
    }
    if (a.rows() > 0) {
        for (double& m : means) {
            m /= static_cast<double>(a.rows());
        }
    }
    return means;
}

}  // namespace neurodavis
