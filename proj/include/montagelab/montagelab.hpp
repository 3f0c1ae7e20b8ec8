#pragma once

#include "montagelab/analysis.hpp"
#include "montagelab/config.hpp"
#include "montagelab/dsp.hpp"
#include "montagelab/edf.hpp"
#include "montagelab/electrodes.hpp"
#include "montagelab/epochs.hpp"
#include "montagelab/error.hpp"
#include "montagelab/eval.hpp"
#include "montagelab/experiment.hpp"
#include "montagelab/feature_io.hpp"
#include "montagelab/features.hpp"
#include "montagelab/hmm.hpp"
#include "montagelab/labels.hpp"
#include "montagelab/model_io.hpp"
#include "montagelab/montage.hpp"
#include "montagelab/normalize.hpp"
#include "montagelab/pca.hpp"
#include "montagelab/pipeline.hpp"
#include "montagelab/random.hpp"
#include "montagelab/recording.hpp"
#include "montagelab/running_stats.hpp"
#include "montagelab/synth.hpp"
#include "montagelab/train.hpp"
