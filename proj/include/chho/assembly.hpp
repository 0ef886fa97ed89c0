#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "basis.hpp"
#include "geometry.hpp"
#include "hho_local.hpp"

namespace chho {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// Global numbering of one HHO field: all cell blocks first (element order),
/// then all face blocks (face order). Interface blocks are shared by both
/// incident elements.
class DofMap {
public:
    DofMap() = default;
    DofMap(const GeometryCache& geo, int k)
        : k_(k), cell_block_(poly_dim_2d(k + 1)), face_block_(poly_dim_1d(k)),
          num_elements_(geo.num_elements()), num_faces_(geo.num_faces())
    {
        scatter_.resize(num_elements_);
        for (std::size_t t = 0; t < num_elements_; ++t) {
            auto& s = scatter_[t];
            const auto& faces = geo.element(t).faces;
            s.reserve(cell_block_ + faces.size() * face_block_);
            for (std::size_t i = 0; i < cell_block_; ++i)
                s.push_back(cell_offset(t) + i);
            for (const auto& lf : faces)
                for (std::size_t i = 0; i < face_block_; ++i)
                    s.push_back(face_offset(lf.face) + i);
        }
    }

    int k() const { return k_; }
    std::size_t cell_block_size() const { return cell_block_; }
    std::size_t face_block_size() const { return face_block_; }
    std::size_t num_cell_dofs() const { return num_elements_ * cell_block_; }
    std::size_t num_face_dofs() const { return num_faces_ * face_block_; }
    std::size_t size() const { return num_cell_dofs() + num_face_dofs(); }
    std::size_t num_elements() const { return num_elements_; }
    std::size_t num_faces() const { return num_faces_; }

    std::size_t cell_offset(std::size_t t) const { return t * cell_block_; }
    std::size_t face_offset(std::size_t f) const { return num_cell_dofs() + f * face_block_; }

    /// Local-to-global index table of element t (cell block, then faces).
    const std::vector<std::size_t>& scatter(std::size_t t) const { return scatter_[t]; }

    Eigen::VectorXd gather(const Eigen::VectorXd& global, std::size_t t) const
    {
        const auto& s = scatter_[t];
        Eigen::VectorXd local(s.size());
        for (std::size_t i = 0; i < s.size(); ++i)
            local[i] = global[s[i]];
        return local;
    }

    void scatter_add(const Eigen::VectorXd& local, std::size_t t, Eigen::VectorXd& global) const
    {
        const auto& s = scatter_[t];
        for (std::size_t i = 0; i < s.size(); ++i)
            global[s[i]] += local[i];
    }

private:
    int k_ = 0;
    std::size_t cell_block_ = 0;
    std::size_t face_block_ = 0;
    std::size_t num_elements_ = 0;
    std::size_t num_faces_ = 0;
    std::vector<std::vector<std::size_t>> scatter_;
};

inline DofMap build_dof_map(const GeometryCache& geo, int k) { return DofMap(geo, k); }

enum class Form { diffusion, convection, mass };

/// Appends scale * local into `triplets` at rows/cols offset into a larger system.
inline void add_local_triplets(const Eigen::MatrixXd& local, const std::vector<std::size_t>& rows,
                               const std::vector<std::size_t>& cols, double scale, std::size_t row_offset,
                               std::size_t col_offset, std::vector<Triplet>& triplets)
{
    for (Eigen::Index j = 0; j < local.cols(); ++j)
        for (Eigen::Index i = 0; i < local.rows(); ++i) {
            const double v = local(i, j);
            if (v != 0.0)
                triplets.emplace_back(static_cast<int>(row_offset + rows[i]), static_cast<int>(col_offset + cols[j]),
                                      scale * v);
        }
}

/// Sum over elements of the scattered local matrices, in element order.
inline SparseMatrix assemble_global(const std::vector<Eigen::MatrixXd>& locals, const DofMap& dofs)
{
    if (locals.size() != dofs.num_elements())
        throw std::invalid_argument("assemble_global: one local matrix per element expected");
    std::vector<Triplet> triplets;
    for (std::size_t t = 0; t < locals.size(); ++t) {
        const auto& s = dofs.scatter(t);
        if (static_cast<std::size_t>(locals[t].rows()) != s.size() ||
            static_cast<std::size_t>(locals[t].cols()) != s.size())
            throw std::out_of_range("element " + std::to_string(t) + ": local matrix does not match the DofMap");
        for (auto g : s)
            if (g >= dofs.size())
                throw std::out_of_range("element " + std::to_string(t) + ": global index out of range (DofMap corrupt)");
        add_local_triplets(locals[t], s, s, 1.0, 0, 0, triplets);
    }
    SparseMatrix m(static_cast<int>(dofs.size()), static_cast<int>(dofs.size()));
    m.setFromTriplets(triplets.begin(), triplets.end());
    return m;
}

inline SparseMatrix assemble_global(Form form, const std::vector<LocalOperatorSet>& locals, const DofMap& dofs)
{
    std::vector<Eigen::MatrixXd> mats;
    mats.reserve(locals.size());
    for (const auto& l : locals) {
        switch (form) {
        case Form::diffusion: mats.push_back(l.diffusion); break;
        case Form::convection: mats.push_back(l.convection); break;
        case Form::mass: mats.push_back(l.mass); break;
        }
    }
    return assemble_global(mats, dofs);
}

} // namespace chho
