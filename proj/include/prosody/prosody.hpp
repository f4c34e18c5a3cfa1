#pragma once

#include "prosody/audio_io.hpp"
#include "prosody/compare.hpp"
#include "prosody/corpus.hpp"
#include "prosody/errors.hpp"
#include "prosody/features.hpp"
#include "prosody/learner.hpp"
#include "prosody/manipulate.hpp"
#include "prosody/synth.hpp"
