// Lightweight model objects mirroring the Python record types.

class Model {
  constructor(key, value) {
    this.key = key;
    this.value = value;
    this.revision = 1;
  }

  update(value) {
    this.value = value;
    this.revision = this.revision + 1;
  }

  label() {
    return this.key + "=" + String(this.value);
  }
}

class TaggedModel extends Model {
  constructor(key, value) {
    super(key, value);
    this.tags = [];
  }

  addTag(tag) {
    if (this.tags.indexOf(tag) < 0) {
      this.tags.push(tag);
    }
    return this.tags.length;
  }

  label() {
    return super.label() + " #" + this.tags.length;
  }
}

function buildModel(spec) {
  try {
    const parts = spec.split("=");
    const model = new TaggedModel(parts[0], parts[1]);
    return model;
  } catch (err) {
    return new TaggedModel("invalid", "");
  }
}

module.exports = { Model, TaggedModel, buildModel };
