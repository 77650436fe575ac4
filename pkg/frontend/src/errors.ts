export class SchemaMismatch extends Error {
  constructor(message: string) {
    super(message);
    this.name = "SchemaMismatch";
  }
}

export class ShapeMismatch extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ShapeMismatch";
  }
}
