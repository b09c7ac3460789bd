"""
Joining met, wave, and yaw records into a training table
========================================================

Field data arrives on three clocks: 10-minute met statistics, hourly
wave-buoy records, and a 1 Hz wind-direction stream.  This script
synthesizes a morning of each, reduces the direction stream to a
10-minute yaw-variability proxy, and joins everything into a Dataset
with air density computed from temperature, pressure, and humidity.
"""
from datetime import datetime, timedelta

import numpy as np

from windcurves import atmosphere

rng = np.random.default_rng(3)
start = datetime(2024, 3, 1, 6, 0)

# Three hours of 10-minute met records (18 rows).
n_fast = 18
fast_times = tuple(start + timedelta(minutes=10 * i) for i in range(n_fast))
fast = atmosphere.FastSeries(
    times=fast_times,
    v=9.0 + 2.0 * np.sin(np.linspace(0, 2.5, n_fast)) + rng.normal(0, 0.3, n_fast),
    temp=np.linspace(6.0, 9.5, n_fast),
    pressure=np.linspace(101900.0, 101600.0, n_fast),
    rh=np.full(n_fast, 0.81),
)

# Hourly wave records; each one forward-fills the six met rows that
# follow it.
wave_times = tuple(start + timedelta(hours=i) for i in range(3))
wave = atmosphere.WaveSeries(
    times=wave_times,
    wave_h=np.array([1.4, 1.7, 2.1]),
    wave_dir=np.array([205.0, 198.0, 190.0]),
)

# A 1 Hz direction stream covering the same span.  The yaw proxy is the
# per-10-minute circular standard deviation of this stream.
n_sec = n_fast * 600
wander = np.cumsum(rng.normal(0, 0.25, n_sec))
directions = (210.0 + wander) % 360.0
proxy = atmosphere.yaw_proxy(directions, window=600)
yaw = atmosphere.YawSeries(times=fast_times, yaw=proxy)
print(f"yaw proxy: {proxy.min():.2f}..{proxy.max():.2f} deg "
      f"over {len(proxy)} windows")

ds, dropped = atmosphere.align_buoy_series(fast, wave, yaw)
print(f"joined {len(ds)} rows ({dropped} dropped outside the overlap)")

rho = ds.column("rho")
print(f"air density from met data: {rho.min():.4f}..{rho.max():.4f} kg/m3")
first = ds.env_samples()[0]
print(f"first row: v {first.v:.2f} m/s, yaw proxy {first.yaw:.2f} deg, "
      f"wave {first.wave_h:.1f} m from {first.wave_dir:.0f} deg")
