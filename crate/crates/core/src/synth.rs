//! Deterministic synthetic corpus: twelve common function types with one
//! hundred implementations each.
//!
//! Every type is made of clone groups: verbatim copies of one
//! implementation, the way snippets spread across package ecosystems. A
//! type has two or three distinct ways of doing its job, small edits of
//! those (renamed parameters, a different constant, a docstring) that were
//! copied in turn, and one rare implementation seen only once.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub const SYNTH_SEED: u64 = 20_230_601;
pub const IMPLEMENTATIONS_PER_TYPE: usize = 100;

struct TypeSpec {
    name: &'static str,
    /// (copies, source) pairs summing to the type's implementation count.
    variants: &'static [(usize, &'static str)],
}

const TYPES: &[TypeSpec] = &[
    TypeSpec {
        name: "get",
        variants: &[
            (17, "def get(self, key, default=None):\n    return self._data.get(key, default)\n"),
            (17, "def get(self, name, default=None):\n    return self._data.get(name, default)\n"),
            (17, "def get(self, key, default=None):\n    \"\"\"Return the stored value.\"\"\"\n    return self._data.get(key, default)\n"),
            (16, "def get(self, key):\n    if key in self.cache:\n        return self.cache[key]\n    return None\n"),
            (16, "def get(self, key):\n    if key in self.items:\n        return self.items[key]\n    return None\n"),
            (16, "def get(url, params=None):\n    response = requests.get(url, params=params)\n    response.raise_for_status()\n    return response.json()\n"),
            (1, "def get(self, index):\n    try:\n        return self.items[index]\n    except IndexError:\n        return None\n"),
        ],
    },
    TypeSpec {
        name: "set",
        variants: &[
            (20, "def set(self, key, value):\n    self._data[key] = value\n"),
            (20, "def set(self, name, value):\n    self._data[name] = value\n"),
            (20, "def set(self, key, value):\n    self.data[key] = value\n"),
            (20, "def set(self, key, value):\n    with self._lock:\n        self._store[key] = value\n        self._dirty = True\n"),
            (19, "def set(self, key, val):\n    with self._lock:\n        self._store[key] = val\n        self._dirty = True\n"),
            (1, "def set(self, value):\n    self.value = value\n    self.notify()\n"),
        ],
    },
    TypeSpec {
        name: "update",
        variants: &[
            (15, "def update(self, other):\n    for key, value in other.items():\n        self[key] = value\n"),
            (14, "def update(self, mapping):\n    for key, value in mapping.items():\n        self[key] = value\n"),
            (14, "def update(self, other):\n    for k, v in other.items():\n        self[k] = v\n"),
            (14, "def update(self, **kwargs):\n    for name, value in kwargs.items():\n        setattr(self, name, value)\n    self.save()\n"),
            (14, "def update(self, **fields):\n    for name, value in fields.items():\n        setattr(self, name, value)\n    self.save()\n"),
            (14, "def update(self, dt):\n    self.x += self.vx * dt\n    self.y += self.vy * dt\n"),
            (14, "def update(self, delta):\n    self.x += self.vx * delta\n    self.y += self.vy * delta\n"),
            (1, "def update(self, *args, **kwargs):\n    self.__dict__.update(*args, **kwargs)\n"),
        ],
    },
    TypeSpec {
        name: "log",
        variants: &[
            (17, "def log(message, level=\"INFO\"):\n    print(\"[%s] %s\" % (level, message))\n"),
            (17, "def log(msg, level=\"INFO\"):\n    print(\"[%s] %s\" % (level, msg))\n"),
            (17, "def log(message, level=\"DEBUG\"):\n    print(\"[%s] %s\" % (level, message))\n"),
            (16, "def log(self, msg, *args):\n    if self.verbose:\n        self.logger.info(msg, *args)\n"),
            (16, "def log(self, message, *args):\n    if self.verbose:\n        self.logger.info(message, *args)\n"),
            (16, "def log(self, msg, *args):\n    if self.debug:\n        self.logger.info(msg, *args)\n"),
            (1, "def log(x, base=10):\n    return math.log(x) / math.log(base)\n"),
        ],
    },
    TypeSpec {
        name: "list",
        variants: &[
            (20, "def list(self):\n    return sorted(self._items.keys())\n"),
            (20, "def list(self):\n    return sorted(self.items.keys())\n"),
            (20, "def list(self, prefix=\"\"):\n    names = []\n    for name in os.listdir(self.root):\n        if name.startswith(prefix):\n            names.append(name)\n    return names\n"),
            (20, "def list(self, prefix=\"\"):\n    result = []\n    for name in os.listdir(self.root):\n        if name.startswith(prefix):\n            result.append(name)\n    return result\n"),
            (19, "def list(self, prefix=\"\"):\n    names = []\n    for entry in os.listdir(self.root):\n        if entry.startswith(prefix):\n            names.append(entry)\n    return names\n"),
            (1, "def list(cls):\n    return cls.query.all()\n"),
        ],
    },
    TypeSpec {
        name: "delete",
        variants: &[
            (17, "def delete(self, key):\n    if key in self._data:\n        self._data.pop(key)\n        return True\n    return False\n"),
            (17, "def delete(self, name):\n    if name in self._data:\n        self._data.pop(name)\n        return True\n    return False\n"),
            (17, "def delete(self):\n    self.session.delete(self)\n    self.session.commit()\n"),
            (16, "def delete(self):\n    self.db.delete(self)\n    self.db.commit()\n"),
            (16, "def delete(path):\n    if os.path.exists(path):\n        os.remove(path)\n"),
            (16, "def delete(filename):\n    if os.path.exists(filename):\n        os.remove(filename)\n"),
            (1, "def delete(self, url):\n    return self.request(\"DELETE\", url)\n"),
        ],
    },
    TypeSpec {
        name: "create",
        variants: &[
            (20, "def create(cls, **kwargs):\n    obj = cls(**kwargs)\n    obj.save()\n    return obj\n"),
            (20, "def create(cls, **attrs):\n    obj = cls(**attrs)\n    obj.save()\n    return obj\n"),
            (20, "def create(cls, **kwargs):\n    instance = cls(**kwargs)\n    instance.save()\n    return instance\n"),
            (20, "def create(self, name, data):\n    path = os.path.join(self.root, name)\n    with open(path, \"w\") as fh:\n        fh.write(data)\n    return path\n"),
            (19, "def create(self, name, content):\n    path = os.path.join(self.root, name)\n    with open(path, \"w\") as fh:\n        fh.write(content)\n    return path\n"),
            (1, "def create(parent, name):\n    node = Node(name)\n    parent.children.append(node)\n    return node\n"),
        ],
    },
    TypeSpec {
        name: "load",
        variants: &[
            (20, "def load(path):\n    with open(path) as fh:\n        return json.load(fh)\n"),
            (20, "def load(filename):\n    with open(filename) as fh:\n        return json.load(fh)\n"),
            (20, "def load(path):\n    with open(path) as f:\n        return json.load(f)\n"),
            (20, "def load(self):\n    if not os.path.exists(self.path):\n        return {}\n    with open(self.path, \"rb\") as fh:\n        self.state = pickle.load(fh)\n    return self.state\n"),
            (19, "def load(self):\n    if not os.path.exists(self.filename):\n        return {}\n    with open(self.filename, \"rb\") as fh:\n        self.state = pickle.load(fh)\n    return self.state\n"),
            (1, "def load(name):\n    module = importlib.import_module(name)\n    return module\n"),
        ],
    },
    TypeSpec {
        name: "save",
        variants: &[
            (20, "def save(self, path):\n    with open(path, \"w\") as fh:\n        json.dump(self.to_dict(), fh, indent=2)\n"),
            (20, "def save(self, filename):\n    with open(filename, \"w\") as fh:\n        json.dump(self.to_dict(), fh, indent=2)\n"),
            (20, "def save(self, path):\n    with open(path, \"w\") as fh:\n        json.dump(self.to_dict(), fh, indent=4)\n"),
            (20, "def save(self):\n    self.updated_at = time.time()\n    self.session.add(self)\n    self.session.commit()\n"),
            (19, "def save(self):\n    self.modified = time.time()\n    self.session.add(self)\n    self.session.commit()\n"),
            (1, "def save(obj, path):\n    with open(path, \"wb\") as fh:\n        pickle.dump(obj, fh)\n"),
        ],
    },
    TypeSpec {
        name: "parse",
        variants: &[
            (20, "def parse(text):\n    result = {}\n    for line in text.splitlines():\n        if \"=\" in line:\n            key, value = line.split(\"=\", 1)\n            result[key.strip()] = value.strip()\n    return result\n"),
            (20, "def parse(content):\n    result = {}\n    for line in content.splitlines():\n        if \"=\" in line:\n            key, value = line.split(\"=\", 1)\n            result[key.strip()] = value.strip()\n    return result\n"),
            (20, "def parse(text):\n    out = {}\n    for line in text.splitlines():\n        if \"=\" in line:\n            key, value = line.split(\"=\", 1)\n            out[key.strip()] = value.strip()\n    return out\n"),
            (20, "def parse(self, data):\n    try:\n        return json.loads(data)\n    except ValueError:\n        raise ParseError(\"invalid document\")\n"),
            (19, "def parse(self, raw):\n    try:\n        return json.loads(raw)\n    except ValueError:\n        raise ParseError(\"invalid document\")\n"),
            (1, "def parse(value):\n    return int(value, 16)\n"),
        ],
    },
    TypeSpec {
        name: "validate",
        variants: &[
            (20, "def validate(self, value):\n    if not isinstance(value, str):\n        raise TypeError(\"expected a string\")\n    return value\n"),
            (20, "def validate(self, value):\n    if not isinstance(value, int):\n        raise TypeError(\"expected an integer\")\n    return value\n"),
            (20, "def validate(self, val):\n    if not isinstance(val, str):\n        raise TypeError(\"expected a string\")\n    return val\n"),
            (20, "def validate(self):\n    errors = []\n    for field in self.required:\n        if getattr(self, field) is None:\n            errors.append(field)\n    return len(errors) == 0\n"),
            (19, "def validate(self):\n    missing = []\n    for field in self.required:\n        if getattr(self, field) is None:\n            missing.append(field)\n    return len(missing) == 0\n"),
            (1, "def validate(email):\n    return \"@\" in email\n"),
        ],
    },
    TypeSpec {
        name: "close",
        variants: &[
            (20, "def close(self):\n    if self._conn is not None:\n        self._conn.close()\n        self._conn = None\n"),
            (20, "def close(self):\n    if self.conn is not None:\n        self.conn.close()\n        self.conn = None\n"),
            (20, "def close(self):\n    if self._sock is not None:\n        self._sock.close()\n        self._sock = None\n"),
            (20, "def close(self):\n    self.closed = True\n    self.fp.flush()\n    self.fp.close()\n"),
            (19, "def close(self):\n    self.closed = True\n    self.stream.flush()\n    self.stream.close()\n"),
            (1, "def close(self):\n    pass\n"),
        ],
    },
];

/// Function names in the synthetic corpus.
pub fn function_names() -> Vec<&'static str> {
    TYPES.iter().map(|t| t.name).collect()
}

#[derive(Serialize)]
struct SynthLine<'a> {
    name: &'a str,
    source: &'a str,
    origin: String,
}

/// The synthetic corpus as JSONL (`name`, `source`, `origin`). Records of
/// one type are contiguous; the order within a type is shuffled.
pub fn synthetic_corpus_jsonl(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lines = Vec::new();
    for spec in TYPES {
        let mut sources: Vec<&str> = Vec::with_capacity(IMPLEMENTATIONS_PER_TYPE);
        for (copies, source) in spec.variants {
            sources.extend(std::iter::repeat_n(*source, *copies));
        }
        sources.shuffle(&mut rng);
        for (i, source) in sources.into_iter().enumerate() {
            lines.push(SynthLine {
                name: spec.name,
                source,
                origin: format!("synthetic/{}/{i:03}", spec.name),
            });
        }
    }
    crate::io::to_jsonl(lines)
}
