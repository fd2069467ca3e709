// Copyright (c) 2026 the opal authors
//
// SPDX-License-Identifier: Apache-2.0

#ifndef OPAL_EIGENSYSTEM_IMPL_HPP
#define OPAL_EIGENSYSTEM_IMPL_HPP

#include <nlohmann/json.hpp>

#include "opal/eigensystem.hpp"

namespace opal {

/// Backend interface behind EigenSystem. Implementations are immutable.
class EigenSystemImpl {
public:
  virtual ~EigenSystemImpl() = default;

  virtual int dim() const = 0;
  virtual Domain domain() const = 0;
  virtual Measure native_measure() const { return Measure::lebesgue(); }
  virtual std::size_t count() const = 0;
  virtual double eigenvalue(std::size_t j) const = 0;
  virtual double eval(std::size_t j, const Point& x) const = 0;
  virtual const std::string& label(std::size_t j) const = 0;
  virtual std::string kind() const = 0;
  virtual nlohmann::json params() const = 0;

  virtual double trace() const = 0;
  virtual double head_sum(std::size_t n) const = 0;

  virtual const NystromSolve* nystrom() const { return nullptr; }
};

} // namespace opal

#endif
