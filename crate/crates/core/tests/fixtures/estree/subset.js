var app = getApp();
var api = 'https://api.example.com';

function format(list, sep) {
  var out = [];
  for (var i = 0; i < list.length; i++) {
    if (list[i] == null) continue;
    out.push(String(list[i]).trim());
  }
  return out.join(sep || ',');
}

Page({
  data: { items: [], keyword: '', page: 1 },
  onLoad: function (options) {
    var that = this;
    var id = options.id ? parseInt(options.id, 10) : 0;
    wx.getStorage({
      key: 'history',
      success: res => that.setData({ items: res.data || [] })
    });
    switch (id % 3) {
      case 0:
        that.page = 1;
        break;
      default:
        that.page = id;
    }
  },
  search(e) {
    const keyword = e.detail.value;
    let url = `${api}/search?q=${keyword}&p=${this.data.page}`;
    try {
      wx.request({ url, method: 'GET', success: (r) => { this.setData({ items: r.data.list }); } });
    } catch (err) {
      console.error(err);
    } finally {
      this.data.page += 1;
    }
  },
  clear: function () {
    var keys = {};
    for (var k in this.data) { keys[k] = typeof this.data[k]; }
    do { this.data.items.pop(); } while (this.data.items.length > 0 && !/^x/.test(k));
    return delete keys.items, void 0;
  }
});
