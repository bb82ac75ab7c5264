def process_transactions(id, data):
    cleaned_id = sanitize(id)
    return handle(cleaned_id, data)

def handle(cleaned_id, data):
    print(f"processed {cleaned_id}")

def sanitize(id: Any) -> str:
    id = str(int(id))
    assert len(id) == 4, f"id: wrong length: {id}"
    return id
