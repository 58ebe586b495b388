export class ModelUnavailable extends Error {
  constructor(message: string) {
    super(message)
    this.name = 'ModelUnavailable'
  }
}

export class SequenceTooLong extends Error {
  constructor(message: string) {
    super(message)
    this.name = 'SequenceTooLong'
  }
}

export class BadInput extends Error {
  constructor(message: string) {
    super(message)
    this.name = 'BadInput'
  }
}
