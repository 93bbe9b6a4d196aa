#ifndef CUBEKIT_CUBEKIT_HPP
#define CUBEKIT_CUBEKIT_HPP

#include "cubekit/assoc.hpp"
#include "cubekit/codec.hpp"
#include "cubekit/convgen.hpp"
#include "cubekit/error.hpp"
#include "cubekit/eval.hpp"
#include "cubekit/geometry.hpp"
#include "cubekit/iou.hpp"
#include "cubekit/pipeline.hpp"
#include "cubekit/scene.hpp"

#endif // CUBEKIT_CUBEKIT_HPP
