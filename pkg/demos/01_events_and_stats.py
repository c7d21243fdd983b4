"""
Ingesting event data and preparing chronological splits
=======================================================

Walks through the data layer: parse a raw event file, summarize it,
cut it into train/val/test by time, and attach negative pairs.
"""

import tempfile
from pathlib import Path

from ctwalks.events import (
    attach_negatives, chronological_split, compute_stats, ingest_events,
    write_events,
)
from ctwalks.synthetic import planted_stream

# Generate a small planted stream and round-trip it through a file, the
# same way real data would arrive. The file format is one interaction per
# line: source, target, timestamp (csv or whitespace separated).
stream = planted_stream(n_communities=2, nodes_per_community=12,
                        n_events=800, intra_multiplier=10.0, seed=1)
path = Path(tempfile.mkdtemp()) / "events.csv"
write_events(stream, path)
print(f"wrote {path} ({path.stat().st_size} bytes)")

stream = ingest_events(path)
print(f"re-ingested {len(stream)} events over {stream.n_nodes} nodes")

# Summary statistics. Intensity is events per node pair per second, the
# single number that calibrates the sampler's time scale.
stats = compute_stats(stream)
for key, value in stats.to_dict().items():
    print(f"  {key:<10} {value:.6g}" if isinstance(value, float)
          else f"  {key:<10} {value}")

# Chronological split: the first 70% of events (by order, which is by
# time) train, the next 15% validate, the rest test. No event ever
# crosses a boundary backwards in time.
splits = chronological_split(stream, (0.7, 0.15, 0.15))
print(f"train/val/test sizes: {len(splits.train)}/"
      f"{len(splits.val)}/{len(splits.test)}")
print(f"train ends at t={splits.t_train_end:.1f}, "
      f"val ends at t={splits.t_val_end:.1f}")

# Each positive event gets one corrupted partner: same source and time,
# target resampled so that the pair never occurs anywhere in the stream.
attach_negatives(splits, stream, seed=7)
for name in ("train", "val", "test"):
    neg = splits.negatives[name]
    print(f"{name}: {len(neg.v)} negatives, "
          f"{neg.fallback_count} fallback draws")
