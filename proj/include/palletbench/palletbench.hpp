#pragma once

#include "palletbench/error.hpp"
#include "palletbench/rng.hpp"
#include "palletbench/io.hpp"
#include "palletbench/parallel.hpp"
#include "palletbench/geometry.hpp"
#include "palletbench/coco.hpp"
#include "palletbench/image.hpp"
#include "palletbench/scene.hpp"
#include "palletbench/render.hpp"
#include "palletbench/eval.hpp"
#include "palletbench/experiment.hpp"
