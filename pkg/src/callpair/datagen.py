"""Synthetic customer populations, call logs and leakage-free feature engineering.

Volumes and class balance follow a reference full-scale deployment (12/2/1
month train/validation/test windows, roughly 2.2% SERVICE_A calls), scaled
down by ``GenConfig.scale``. Every feature of a call is computed from history
strictly before the call's timestamp.
"""

from __future__ import annotations

import calendar
import csv
import io
import math
from bisect import bisect_left
from dataclasses import asdict, dataclass, field
from datetime import datetime, timedelta
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.optimize import brentq
from scipy.special import expit

from .domain import CallRecord, ConfigError, DataError, Label
from .io import read_json, write_json, write_text

SPLITS = ("train", "validation", "test")

# Reference full-scale volumes: months, unique callers, SERVICE_A calls, other calls.
REFERENCE_VOLUMES = {
    "train": {"months": 12, "unique_callers": 162563, "service_a": 18581, "other": 822102, "total_listed": 849683},
    "validation": {"months": 2, "unique_callers": 56317, "service_a": 2289, "other": 118317, "total_listed": 120606},
    "test": {"months": 1, "unique_callers": 34128, "service_a": 1378, "other": 59407, "total_listed": 60785},
}
# 18581 / 849683
DEFAULT_POSITIVE_RATE = 0.0219
FULL_SCALE_CUSTOMERS = 200_000

LANGUAGES = ("greek", "english", "other")
LANGUAGE_P = (0.8, 0.15, 0.05)
REGIONS = ("north", "south", "east", "west", "central")
REGION_P = (0.3, 0.25, 0.2, 0.15, 0.1)
PRODUCTS = ("service_a", "internet", "mobile", "tv", "landline")
PRODUCT_P = (0.2, 0.7, 0.8, 0.4, 0.3)

SERVICE_A_DEPT = 0
NO_HISTORY_DAYS = 10000.0
DAY = 86400.0
WINDOWS = (("1m", 30), ("3m", 91), ("12m", 365))


def add_months(dt: datetime, months: int) -> datetime:
    y, m = divmod(dt.month - 1 + months, 12)
    year, month = dt.year + y, m + 1
    return dt.replace(year=year, month=month, day=min(dt.day, calendar.monthrange(year, month)[1]))


@dataclass(frozen=True)
class ServiceContract:
    service_id: str
    product: str
    start: datetime
    expiration: datetime
    status: str

    def __post_init__(self):
        if self.start > self.expiration:
            raise DataError(f"service {self.service_id}: start after expiration")


@dataclass(frozen=True)
class Interaction:
    timestamp: datetime
    channel: str  # "call_center" or "retail"
    department: int


@dataclass(frozen=True)
class CustomerRecord:
    caller_id: int
    age: int
    language: str
    region: str
    user_type: str
    active_services: tuple
    interaction_history: tuple
    # generator latents; never read by feature engineering
    activity: float = 1.0
    interest: float = 0.0

    def __post_init__(self):
        ts = [i.timestamp for i in self.interaction_history]
        if any(a > b for a, b in zip(ts, ts[1:])):
            raise DataError(f"customer {self.caller_id}: interaction history not sorted")

    def with_history(self, history) -> "CustomerRecord":
        history = tuple(sorted(history, key=lambda i: (i.timestamp, i.channel, i.department)))
        return CustomerRecord(
            self.caller_id, self.age, self.language, self.region, self.user_type,
            self.active_services, history, self.activity, self.interest,
        )


@dataclass(frozen=True)
class GenConfig:
    scale: float = 0.01
    n_customers: int | None = None
    months: tuple = (12, 2, 1)
    positive_rate: float = DEFAULT_POSITIVE_RATE
    calls_per_customer_mean: float | None = None
    seed: int = 0
    label_signal_strength: float = 1.5
    n_departments: int = 4
    start: str = "2021-01-01T00:00:00"
    history_months: int = 12

    def __post_init__(self):
        object.__setattr__(self, "months", tuple(int(m) for m in self.months))
        if len(self.months) != 3 or any(m < 1 for m in self.months):
            raise ConfigError("months must be three positive integers (train, validation, test)")
        if not (0.0 < self.positive_rate < 0.5):
            raise ConfigError("positive_rate must lie in (0, 0.5)")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ConfigError("scale must be positive")
        if self.n_customers is not None and int(self.n_customers) < 1:
            raise ConfigError("n_customers must be at least 1")
        if self.calls_per_customer_mean is not None and not self.calls_per_customer_mean > 0:
            raise ConfigError("calls_per_customer_mean must be positive")
        if not (self.label_signal_strength >= 0 and math.isfinite(self.label_signal_strength)):
            raise ConfigError("label_signal_strength must be >= 0")
        if int(self.n_departments) < 2:
            raise ConfigError("n_departments must be at least 2")
        if int(self.seed) < 0 or int(self.seed) >= 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.history_months < 0:
            raise ConfigError("history_months must be >= 0")
        self.start_dt  # validates the date string

    @cached_property
    def start_dt(self) -> datetime:
        try:
            return datetime.fromisoformat(self.start)
        except ValueError as exc:
            raise ConfigError(f"bad start date {self.start!r}") from exc

    @property
    def resolved_n_customers(self) -> int:
        if self.n_customers is not None:
            return int(self.n_customers)
        return max(1, round(self.scale * FULL_SCALE_CUSTOMERS))

    def windows(self) -> dict:
        """Half-open ``[start, end)`` window per split."""
        out = {}
        cur = self.start_dt
        for name, m in zip(SPLITS, self.months):
            nxt = add_months(cur, m)
            out[name] = (cur, nxt)
            cur = nxt
        return out

    def split_volumes(self) -> dict:
        ref = REFERENCE_VOLUMES
        monthly = {s: (ref[s]["service_a"] + ref[s]["other"]) / ref[s]["months"] for s in SPLITS}
        raw = {s: self.scale * monthly[s] * m for s, m in zip(SPLITS, self.months)}
        if self.calls_per_customer_mean is None:
            return {s: max(1, round(v)) for s, v in raw.items()}
        total = round(self.resolved_n_customers * self.calls_per_customer_mean)
        weight = sum(raw.values())
        return {s: max(1, round(total * v / weight)) for s, v in raw.items()}

    @property
    def department_names(self) -> tuple:
        return ("service_a",) + tuple(f"dept{k}" for k in range(1, self.n_departments))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["months"] = list(self.months)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GenConfig":
        d = dict(d)
        if "months" in d:
            d["months"] = tuple(d["months"])
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


def feature_names(cfg: GenConfig | None = None) -> list:
    cfg = cfg or GenConfig()
    names = ["age_norm", "user_type_company"]
    names += [f"lang_{l}" for l in LANGUAGES]
    names += [f"region_{r}" for r in REGIONS]
    names += [
        "active_services",
        "services_expiring_60d",
        "services_expired_90d",
        "owns_service_a",
        "tenure_years",
    ]
    names += [f"calls_{w}" for w, _ in WINDOWS]
    for dept in cfg.department_names:
        names += [f"prior_{dept}_calls_{w}" for w, _ in WINDOWS]
    names += [
        "retail_visits_3m",
        "retail_service_a_3m",
        "days_since_last_interaction",
        "days_since_last_service_a",
        "hour_of_day",
        "is_weekend",
    ]
    return names


def engineer_features(cust: CustomerRecord, as_of: datetime, n_departments: int = 4) -> np.ndarray:
    """Feature vector for a call by ``cust`` at ``as_of``.

    Only interactions strictly before ``as_of`` and service dates are used;
    the stored contract status reflects extraction time and is ignored.
    """
    out = [min(max((cust.age - 18) / 62.0, 0.0), 1.0), 1.0 if cust.user_type == "company" else 0.0]
    out += [1.0 if cust.language == l else 0.0 for l in LANGUAGES]
    out += [1.0 if cust.region == r else 0.0 for r in REGIONS]

    active = expiring = expired = 0
    owns_a = 0.0
    first_start = None
    soon = as_of + timedelta(days=60)
    recent = as_of - timedelta(days=90)
    for s in cust.active_services:
        if s.start > as_of:
            continue
        if first_start is None or s.start < first_start:
            first_start = s.start
        if s.expiration > as_of:
            active += 1
            if s.expiration <= soon:
                expiring += 1
            if s.product == "service_a":
                owns_a = 1.0
        elif s.expiration > recent:
            expired += 1
    tenure = (as_of - first_start).total_seconds() / (365.0 * DAY) if first_start else 0.0
    out += [float(active), float(expiring), float(expired), owns_a, tenure]

    calls = [0] * len(WINDOWS)
    per_dept = [[0] * len(WINDOWS) for _ in range(n_departments)]
    retail = retail_a = 0
    last_any = last_a = None
    for it in cust.interaction_history:
        if it.timestamp >= as_of:
            break
        age_days = (as_of - it.timestamp).total_seconds() / DAY
        last_any = age_days
        if it.department == SERVICE_A_DEPT:
            last_a = age_days
        if it.channel == "call_center":
            for k, (_, days) in enumerate(WINDOWS):
                if age_days <= days:
                    calls[k] += 1
                    per_dept[it.department][k] += 1
        elif age_days <= 91:
            retail += 1
            if it.department == SERVICE_A_DEPT:
                retail_a += 1
    out += [float(c) for c in calls]
    for row in per_dept:
        out += [float(c) for c in row]
    out += [
        float(retail),
        float(retail_a),
        NO_HISTORY_DAYS if last_any is None else last_any,
        NO_HISTORY_DAYS if last_a is None else last_a,
        as_of.hour + as_of.minute / 60.0,
        1.0 if as_of.weekday() >= 5 else 0.0,
    ]
    return np.asarray(out, dtype=np.float64)


# weights of the latent SERVICE_A propensity; keys are feature names
STATIC_WEIGHTS = {
    "retail_service_a_3m": (0.9, 2),
    "services_expiring_60d": (0.8, 2),
    "owns_service_a": (-1.2, None),
    "user_type_company": (0.4, None),
    "age_norm": (-0.6, None),
    "calls_3m": (0.1, 5),
}
DYNAMIC_WEIGHTS = {
    "prior_service_a_calls_1m": (1.4, 2),
    "prior_service_a_calls_3m": (0.7, 3),
    "prior_service_a_calls_12m": (0.25, 4),
}
INTEREST_WEIGHT = 0.8


def _weighted(values: dict, weights: dict) -> float:
    total = 0.0
    for name, (w, cap) in weights.items():
        v = values[name]
        total += w * (min(v, cap) if cap is not None else v)
    return total


def label_score(features: np.ndarray, names: list, interest: float) -> float:
    """Latent SERVICE_A propensity before the intercept and signal strength."""
    values = dict(zip(names, features))
    return _weighted(values, STATIC_WEIGHTS) + _weighted(values, DYNAMIC_WEIGHTS) + INTEREST_WEIGHT * interest


def generate_population(cfg: GenConfig) -> list:
    """Customers with demographics, service contracts and retail visits (no calls yet)."""
    ss = np.random.SeedSequence(int(cfg.seed))
    rng = np.random.default_rng(ss.spawn(1)[0])
    n = cfg.resolved_n_customers
    windows = cfg.windows()
    horizon_start = add_months(cfg.start_dt, -cfg.history_months)
    horizon_end = windows["test"][1]
    horizon_sec = (horizon_end - horizon_start).total_seconds()

    ages = rng.integers(18, 81, size=n)
    langs = rng.choice(len(LANGUAGES), size=n, p=LANGUAGE_P)
    regions = rng.choice(len(REGIONS), size=n, p=REGION_P)
    company = rng.random(n) < 0.15
    activity = rng.gamma(1.5, 1.0 / 1.5, size=n)
    interest = rng.normal(size=n)

    customers = []
    for u in range(n):
        services = []
        for p_idx, (product, p_own) in enumerate(zip(PRODUCTS, PRODUCT_P)):
            if product == "service_a":
                p_own = p_own + (0.1 if company[u] else 0.0) - 0.1 * interest[u]
            if rng.random() >= min(max(p_own, 0.02), 0.98):
                continue
            start = horizon_start - timedelta(days=float(rng.uniform(0, 6 * 365)))
            line = 0
            while start < horizon_end:
                length = 12 if rng.random() < 0.5 else 24
                exp = add_months(start, length)
                renew = rng.random() < 0.85
                if exp > horizon_end:
                    status = "active"
                else:
                    status = "expired" if renew else "cancelled"
                services.append(
                    ServiceContract(f"{u + 1}-{product}-{line}", product, start, exp, status)
                )
                line += 1
                if not renew:
                    # gap before a possible new line of the same product
                    if rng.random() < 0.3:
                        start = exp + timedelta(days=float(rng.uniform(30, 365)))
                        continue
                    break
                start = exp
        n_retail = rng.poisson(0.25 * activity[u] * horizon_sec / (30 * DAY))
        offs = np.sort(rng.uniform(0, horizon_sec, size=n_retail))
        p_a = expit(-2.0 + 1.2 * interest[u])
        history = []
        for off in offs:
            dept = SERVICE_A_DEPT if rng.random() < p_a else int(rng.integers(1, cfg.n_departments))
            ts = horizon_start + timedelta(seconds=int(off))
            history.append(Interaction(ts, "retail", dept))
        customers.append(
            CustomerRecord(
                caller_id=u + 1,
                age=int(ages[u]),
                language=LANGUAGES[langs[u]],
                region=REGIONS[regions[u]],
                user_type="company" if company[u] else "individual",
                active_services=tuple(services),
                interaction_history=tuple(history),
                activity=float(activity[u]),
                interest=float(interest[u]),
            )
        )
    return customers


@dataclass(frozen=True)
class Call:
    caller_id: int
    timestamp: datetime
    true_label: Label
    department: int
    in_window: bool


def _draw_times(rng, start: datetime, end: datetime, n: int) -> list:
    days = (end - start).days
    day = rng.integers(0, days, size=n)
    business = rng.random(n) < 0.9
    sec = np.where(
        business,
        rng.uniform(8 * 3600, 20 * 3600, size=n),
        rng.uniform(0, 86400, size=n),
    ).astype(np.int64)
    return [start + timedelta(days=int(d), seconds=int(s)) for d, s in zip(day, sec)]


def _schedule(pop, cfg, rng):
    """Caller ids and timestamps of all calls, including pre-window history."""
    windows = cfg.windows()
    volumes = cfg.split_volumes()
    weights = np.array([c.activity for c in pop])
    weights = weights / weights.sum()
    slots = []
    train_monthly = volumes["train"] / cfg.months[0]
    n_pre = round(train_monthly * cfg.history_months)
    periods = []
    if n_pre:
        periods.append((add_months(cfg.start_dt, -cfg.history_months), cfg.start_dt, n_pre, False))
    for s in SPLITS:
        a, b = windows[s]
        periods.append((a, b, volumes[s], True))
    for a, b, n, inside in periods:
        callers = rng.choice(len(pop), size=n, p=weights)
        times = _draw_times(rng, a, b, n)
        slots += [(t, int(c), inside) for t, c in zip(times, callers)]
    slots.sort(key=lambda s: (s[0], s[1]))
    return slots


def generate_calls(pop: list, cfg: GenConfig) -> list:
    """Timestamped calls with labels drawn from a logistic link over as-of features.

    The intercept is solved so the expected SERVICE_A fraction of in-window
    calls equals ``cfg.positive_rate``. Calls are processed in time order, so a
    caller's earlier SERVICE_A calls feed the propensity of later ones.
    """
    if not pop:
        raise DataError("population is empty")
    ss = np.random.SeedSequence(int(cfg.seed)).spawn(2)[1]
    rng = np.random.default_rng(ss)
    slots = _schedule(pop, cfg, rng)
    n = len(slots)
    u = rng.random(n)
    other_dept = rng.integers(1, cfg.n_departments, size=n)
    names = feature_names(cfg)
    col = {nm: i for i, nm in enumerate(names)}

    # label-independent part of the score; call placeholders carry no department signal
    placeholder = {}
    for t, c, _ in slots:
        placeholder.setdefault(c, []).append(Interaction(t, "call_center", 1))
    withcalls = {
        c: pop[c].with_history(pop[c].interaction_history + tuple(v)) for c, v in placeholder.items()
    }
    static = np.empty(n)
    for j, (t, c, _) in enumerate(slots):
        f = engineer_features(withcalls[c], t, cfg.n_departments)
        static[j] = _weighted(dict(zip(names, f)), STATIC_WEIGHTS) + INTEREST_WEIGHT * pop[c].interest
    del withcalls, placeholder

    tsec = np.array([(t - cfg.start_dt).total_seconds() for t, _, _ in slots])
    cust = np.array([c for _, c, _ in slots])
    inside = np.array([s[2] for s in slots])
    dyn = [(w, cap, days * DAY) for (w, cap), (_, days) in zip(DYNAMIC_WEIGHTS.values(), WINDOWS)]
    strength = cfg.label_signal_strength

    def run(b):
        pos_times = {}
        expected = 0.0
        labels = np.zeros(n, dtype=bool)
        for j in range(n):
            t = tsec[j]
            lst = pos_times.get(cust[j])
            d = 0.0
            if lst:
                hi = bisect_left(lst, t)
                for w, cap, span in dyn:
                    # window boundary is inclusive, as in engineer_features
                    cnt = hi - bisect_left(lst, t - span)
                    d += w * min(cnt, cap)
            p = 1.0 / (1.0 + math.exp(-(b + strength * (static[j] + d))))
            if inside[j]:
                expected += p
            if u[j] < p:
                labels[j] = True
                pos_times.setdefault(cust[j], []).append(t)
        return expected, labels

    target = cfg.positive_rate * int(inside.sum())
    b = brentq(lambda x: run(x)[0] - target, -30.0, 15.0, xtol=1e-6)
    _, labels = run(b)
    return [
        Call(
            caller_id=c + 1,
            timestamp=t,
            true_label=Label.SERVICE_A if labels[j] else Label.OTHER,
            department=SERVICE_A_DEPT if labels[j] else int(other_dept[j]),
            in_window=bool(ins),
        )
        for j, (t, c, ins) in enumerate(slots)
    ]


def attach_calls(pop: list, calls: list) -> list:
    """Population with every call merged into its caller's interaction history."""
    extra = {}
    for call in calls:
        extra.setdefault(call.caller_id, []).append(
            Interaction(call.timestamp, "call_center", call.department)
        )
    return [
        c.with_history(c.interaction_history + tuple(extra[c.caller_id])) if c.caller_id in extra else c
        for c in pop
    ]


@dataclass(frozen=True)
class LabeledDataset:
    records: tuple
    feature_names: tuple
    split_tag: str
    window: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        d = len(self.feature_names)
        for r in self.records:
            if len(r.features) != d:
                raise DataError(f"record for caller {r.caller_id} has {len(r.features)} features, expected {d}")
        if self.window is not None:
            a, b = self.window
            for r in self.records:
                if not (a <= r.timestamp < b):
                    raise DataError(f"record at {r.timestamp} outside {self.split_tag} window")

    def __len__(self):
        return len(self.records)

    @cached_property
    def X(self) -> np.ndarray:
        if not self.records:
            return np.zeros((0, len(self.feature_names)))
        return np.asarray([r.features for r in self.records], dtype=np.float64)

    @cached_property
    def y(self) -> np.ndarray:
        return np.asarray([int(r.true_label) for r in self.records], dtype=np.int64)

    def summary(self) -> dict:
        pos = int(self.y.sum()) if self.records else 0
        out = {
            "split": self.split_tag,
            "unique_callers": len({r.caller_id for r in self.records}),
            "service_a_calls": pos,
            "other_calls": len(self.records) - pos,
            "total_calls": len(self.records),
        }
        if self.window is not None:
            a, b = self.window
            out["window_start"] = a.isoformat()
            out["window_end"] = b.isoformat()
        return out


def temporal_split(calls: list, cfg: GenConfig, population: list) -> tuple:
    """Features as of each call, then half-open 12/2/1-month windows.

    A call exactly on a boundary instant belongs to the later split. Calls
    outside all windows (pre-window history) are dropped.
    """
    windows = cfg.windows()
    first = windows[SPLITS[0]][0]
    last = windows[SPLITS[-1]]
    stamps = [c.timestamp for c in calls]
    if not stamps or min(stamps) >= windows[SPLITS[0]][1] or max(stamps) < last[0]:
        raise DataError(
            f"calls do not span the {sum(cfg.months)}-month window starting {first.isoformat()}"
        )
    by_id = {c.caller_id: c for c in population}
    names = feature_names(cfg)
    buckets = {s: [] for s in SPLITS}
    for call in calls:
        for s in SPLITS:
            a, b = windows[s]
            if a <= call.timestamp < b:
                cust = by_id.get(call.caller_id)
                if cust is None:
                    raise DataError(f"call from unknown caller {call.caller_id}")
                feats = engineer_features(cust, call.timestamp, cfg.n_departments)
                buckets[s].append(CallRecord(call.caller_id, call.timestamp, feats, call.true_label))
                break
    return tuple(LabeledDataset(buckets[s], names, s, windows[s]) for s in SPLITS)


def build_datasets(cfg: GenConfig) -> tuple:
    """Full pipeline: population, calls, history, features, splits."""
    pop = generate_population(cfg)
    calls = generate_calls(pop, cfg)
    pop = attach_calls(pop, calls)
    return temporal_split(calls, cfg, pop)


def _fmt(v: float) -> str:
    return repr(float(v))


def dataset_to_csv(ds: LabeledDataset) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["caller_id", "timestamp", "split", "label", *ds.feature_names])
    for r in ds.records:
        w.writerow(
            [r.caller_id, r.timestamp.isoformat(), ds.split_tag, r.true_label.name, *(_fmt(v) for v in r.features)]
        )
    return buf.getvalue()


def write_datasets(datasets, cfg: GenConfig, out_dir) -> dict:
    out_dir = Path(out_dir)
    paths = {}
    for ds in datasets:
        paths[ds.split_tag] = write_text(out_dir / f"{ds.split_tag}.csv", dataset_to_csv(ds))
    schema = {
        "feature_names": list(datasets[0].feature_names),
        "generation_config": cfg.to_dict(),
        "splits": {ds.split_tag: ds.summary() for ds in datasets},
        "label_values": ["OTHER", "SERVICE_A"],
    }
    paths["schema"] = write_json(out_dir / "schema.json", schema)
    return paths


def read_dataset(path, schema_path=None) -> LabeledDataset:
    path = Path(path)
    if not path.exists():
        raise DataError(f"dataset file not found: {path}")
    schema_path = Path(schema_path) if schema_path else path.parent / "schema.json"
    names = None
    window = None
    split = path.stem
    if schema_path.exists():
        schema = read_json(schema_path)
        names = schema["feature_names"]
        info = schema.get("splits", {}).get(split)
        if info and "window_start" in info:
            window = (datetime.fromisoformat(info["window_start"]), datetime.fromisoformat(info["window_end"]))
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:4] != ["caller_id", "timestamp", "split", "label"]:
            raise DataError(f"{path}: unexpected header")
        if names is None:
            names = header[4:]
        elif list(names) != header[4:]:
            raise DataError(f"{path}: feature columns do not match schema")
        for row in reader:
            try:
                records.append(
                    CallRecord(int(row[0]), datetime.fromisoformat(row[1]), [float(v) for v in row[4:]], Label.parse(row[3]))
                )
            except (ValueError, IndexError) as exc:
                raise DataError(f"{path}: malformed row {row[:4]}") from exc
            split = row[2]
    return LabeledDataset(records, names, split, window)


def read_datasets(data_dir) -> tuple:
    data_dir = Path(data_dir)
    return tuple(read_dataset(data_dir / f"{s}.csv", data_dir / "schema.json") for s in SPLITS)
