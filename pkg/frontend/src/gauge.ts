/**
 * Safe-band gauge model for the load-cell voltage: the [3, 4] V band is the
 * grip strong enough to hold and weak enough not to break. Pure math here;
 * the DOM layer just positions a needle and applies the zone class.
 */

export const BAND_LOW = 3.0;
export const BAND_HIGH = 4.0;
export const GAUGE_MIN = 2.0;
export const GAUGE_MAX = 4.6;
export const REST_V = 4.5;

export type GaugeZone = "rest" | "in_band" | "above_band" | "below_band";

export interface GaugeView {
  zone: GaugeZone;
  /** needle position as a fraction of gauge width, 0 = GAUGE_MIN end */
  needle: number;
  /** band extent as fractions of gauge width */
  bandStart: number;
  bandEnd: number;
}

function fraction(volts: number): number {
  const f = (volts - GAUGE_MIN) / (GAUGE_MAX - GAUGE_MIN);
  return Math.min(Math.max(f, 0), 1);
}

export function classify(loadVolts: number): GaugeZone {
  if (loadVolts >= REST_V - 0.05) return "rest";
  if (loadVolts < BAND_LOW) return "below_band";
  if (loadVolts > BAND_HIGH) return "above_band";
  return "in_band";
}

export function gaugeView(loadVolts: number): GaugeView {
  return {
    zone: classify(loadVolts),
    needle: fraction(loadVolts),
    bandStart: fraction(BAND_LOW),
    bandEnd: fraction(BAND_HIGH),
  };
}
