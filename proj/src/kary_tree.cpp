#include "kst/kary_tree.hpp"

namespace kst {

template class BasicTree<NoHooks>;

}  // namespace kst
